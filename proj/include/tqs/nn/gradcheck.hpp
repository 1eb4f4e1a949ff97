#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tqs/nn/params.hpp"
#include "tqs/rng.hpp"

namespace tqs::nn {

struct GradCheckOptions {
  size_t sample = 200;  // coordinates checked (all of them when fewer exist)
  Real step = 1e-5;     // central-difference step
  Real guard = 1e-8;    // denominator floor for the relative error
};

struct GradCheckReport {
  Real max_rel_err = 0;
  size_t checked = 0;
  std::string worst_coord;
  Real worst_analytic = 0;
  Real worst_numeric = 0;

  bool pass(Real tolerance) const { return max_rel_err < tolerance; }
};

// Compares analytic gradients against central finite differences on a random
// coordinate subsample. `loss` must be a deterministic function of the
// current parameter values (dropout off); `compute_grads` must leave the
// full analytic gradient in the refs' grad tensors.
GradCheckReport grad_check(const std::function<Real()>& loss,
                           const std::function<void()>& compute_grads,
                           const std::vector<ParamRef>& refs, Rng& rng,
                           const GradCheckOptions& options = {});

}  // namespace tqs::nn
