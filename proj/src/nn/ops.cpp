#include "tqs/nn/ops.hpp"

#include <algorithm>
#include <cmath>

namespace tqs::nn {

void softmax_inplace(std::span<Real> v) {
  if (v.empty()) throw ShapeError("softmax: empty input");
  Real mx = *std::max_element(v.begin(), v.end());
  Real sum = 0;
  for (Real& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (Real& x : v) x /= sum;
}

std::vector<Real> softmax(std::span<const Real> logits) {
  std::vector<Real> out(logits.begin(), logits.end());
  softmax_inplace(out);
  return out;
}

Real cross_entropy(std::span<const Real> pred, size_t target) {
  if (target >= pred.size()) throw ShapeError("cross_entropy: target index out of range");
  return -std::log(std::max(pred[target], kProbFloor));
}

void softmax_ce_backward(std::span<const Real> probs, size_t target, Real scale,
                         std::span<Real> dlogits) {
  if (target >= probs.size() || dlogits.size() != probs.size())
    throw ShapeError("softmax_ce_backward: dimension mismatch");
  for (size_t i = 0; i < probs.size(); ++i) dlogits[i] += scale * probs[i];
  dlogits[target] -= scale;
}

std::vector<Real> dropout_mask(size_t dim, Real rate, Rng& rng) {
  if (rate < 0 || rate >= 1) throw ConfigError("dropout rate must be in [0, 1)");
  std::vector<Real> mask(dim, Real(1));
  if (rate == 0) return mask;
  Real keep_scale = Real(1) / (Real(1) - rate);
  for (Real& m : mask) m = rng.uniform() < rate ? Real(0) : keep_scale;
  return mask;
}

}  // namespace tqs::nn
