#pragma once

#include <string>
#include <vector>

#include "tqs/nn/matrix.hpp"

namespace tqs::nn {

// Named view onto one parameter tensor and its gradient accumulator. Models
// expose their full parameter set as a vector of these so the optimizer,
// gradient checker, and checkpoint code can stay generic.
struct ParamRef {
  std::string name;
  Matrix* value = nullptr;
  Matrix* grad = nullptr;
};

size_t param_count(const std::vector<ParamRef>& refs);
void zero_grads(const std::vector<ParamRef>& refs);
Real grad_norm(const std::vector<ParamRef>& refs);

// Scales all gradients so their global L2 norm is at most max_norm.
void clip_grads(const std::vector<ParamRef>& refs, Real max_norm);

// Flat coordinate addressing across the concatenated parameter vector, used
// by the finite-difference oracle and per-sequence gradient buffers.
Real get_flat_value(const std::vector<ParamRef>& refs, size_t idx);
Real get_flat_grad(const std::vector<ParamRef>& refs, size_t idx);
void add_flat_value(const std::vector<ParamRef>& refs, size_t idx, Real delta);
// Returns "tensor_name[offset]" for error reporting.
std::string describe_flat(const std::vector<ParamRef>& refs, size_t idx);

std::vector<Real> flatten_grads(const std::vector<ParamRef>& refs);
void add_grads_from_flat(const std::vector<ParamRef>& refs, const std::vector<Real>& flat);

}  // namespace tqs::nn
