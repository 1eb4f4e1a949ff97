#include "tqs/nn/params.hpp"

#include <cmath>

namespace tqs::nn {

namespace {

// Maps a flat index to (ref, offset); throws if out of range.
std::pair<const ParamRef*, size_t> locate(const std::vector<ParamRef>& refs, size_t idx) {
  for (const auto& r : refs) {
    if (idx < r.value->size()) return {&r, idx};
    idx -= r.value->size();
  }
  throw ShapeError("flat parameter index out of range");
}

}  // namespace

size_t param_count(const std::vector<ParamRef>& refs) {
  size_t n = 0;
  for (const auto& r : refs) n += r.value->size();
  return n;
}

void zero_grads(const std::vector<ParamRef>& refs) {
  for (const auto& r : refs) r.grad->set_zero();
}

Real grad_norm(const std::vector<ParamRef>& refs) {
  Real sq = 0;
  for (const auto& r : refs)
    for (Real g : r.grad->data()) sq += g * g;
  return std::sqrt(sq);
}

void clip_grads(const std::vector<ParamRef>& refs, Real max_norm) {
  Real norm = grad_norm(refs);
  if (norm <= max_norm || norm == 0) return;
  Real scale = max_norm / norm;
  for (const auto& r : refs)
    for (Real& g : r.grad->data()) g *= scale;
}

Real get_flat_value(const std::vector<ParamRef>& refs, size_t idx) {
  auto [r, off] = locate(refs, idx);
  return r->value->data()[off];
}

Real get_flat_grad(const std::vector<ParamRef>& refs, size_t idx) {
  auto [r, off] = locate(refs, idx);
  return r->grad->data()[off];
}

void add_flat_value(const std::vector<ParamRef>& refs, size_t idx, Real delta) {
  auto [r, off] = locate(refs, idx);
  r->value->data()[off] += delta;
}

std::string describe_flat(const std::vector<ParamRef>& refs, size_t idx) {
  auto [r, off] = locate(refs, idx);
  return r->name + "[" + std::to_string(off) + "]";
}

std::vector<Real> flatten_grads(const std::vector<ParamRef>& refs) {
  std::vector<Real> flat;
  flat.reserve(param_count(refs));
  for (const auto& r : refs)
    for (Real g : r.grad->data()) flat.push_back(g);
  return flat;
}

void add_grads_from_flat(const std::vector<ParamRef>& refs, const std::vector<Real>& flat) {
  size_t i = 0;
  for (const auto& r : refs)
    for (Real& g : r.grad->data()) g += flat[i++];
}

}  // namespace tqs::nn
