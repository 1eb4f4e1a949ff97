#pragma once

#include <span>
#include <vector>

#include "tqs/nn/matrix.hpp"
#include "tqs/rng.hpp"

namespace tqs::nn {

// Probabilities are floored at this value inside cross_entropy so the loss
// stays finite even on a collapsed distribution.
inline constexpr Real kProbFloor = 1e-12;

// Max-subtracted softmax; output is positive and sums to 1.
void softmax_inplace(std::span<Real> v);
std::vector<Real> softmax(std::span<const Real> logits);

// -ln(max(pred[target], kProbFloor)), in nats.
Real cross_entropy(std::span<const Real> pred, size_t target);

// Gradient of scale * cross_entropy(softmax(logits), target) w.r.t. logits,
// accumulated into dlogits: += scale * (p - onehot(target)).
void softmax_ce_backward(std::span<const Real> probs, size_t target, Real scale,
                         std::span<Real> dlogits);

// Inverted dropout: entries are 0 with probability rate, else 1/(1-rate).
// Training-mode only; inference never applies a mask.
std::vector<Real> dropout_mask(size_t dim, Real rate, Rng& rng);

inline Real sigmoid(Real x) { return Real(1) / (Real(1) + std::exp(-x)); }

}  // namespace tqs::nn
