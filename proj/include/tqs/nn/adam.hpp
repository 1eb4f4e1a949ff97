#pragma once

#include <cstdint>
#include <vector>

#include "tqs/nn/params.hpp"

namespace tqs::nn {

struct AdamConfig {
  Real lr = 1e-3;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter set. Moment accumulators mirror
// the parameter shapes and are created lazily on the first step.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : cfg_(cfg) {}

  // One update using the gradients currently held by the refs.
  void step(const std::vector<ParamRef>& refs);

  uint64_t t() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  AdamConfig& config() { return cfg_; }

  // Exposed for checkpoint (de)serialization.
  std::vector<Matrix>& first_moments() { return m_; }
  std::vector<Matrix>& second_moments() { return v_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }
  void set_t(uint64_t t) { t_ = t; }

 private:
  AdamConfig cfg_;
  std::vector<Matrix> m_, v_;
  uint64_t t_ = 0;
};

}  // namespace tqs::nn
