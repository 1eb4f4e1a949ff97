#include "tqs/nn/adam.hpp"

#include <cmath>

namespace tqs::nn {

void AdamState::step(const std::vector<ParamRef>& refs) {
  if (m_.empty()) {
    for (const auto& r : refs) {
      m_.emplace_back(r.value->rows(), r.value->cols());
      v_.emplace_back(r.value->rows(), r.value->cols());
    }
  }
  if (m_.size() != refs.size()) throw ShapeError("AdamState: parameter set changed");

  ++t_;
  const Real corr1 = Real(1) - std::pow(cfg_.beta1, Real(t_));
  const Real corr2 = Real(1) - std::pow(cfg_.beta2, Real(t_));
  for (size_t p = 0; p < refs.size(); ++p) {
    if (!refs[p].value->same_shape(m_[p])) throw ShapeError("AdamState: shape mismatch");
    auto theta = refs[p].value->data();
    auto grad = refs[p].grad->data();
    auto m = m_[p].data();
    auto v = v_[p].data();
    for (size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (Real(1) - cfg_.beta1) * grad[i];
      v[i] = cfg_.beta2 * v[i] + (Real(1) - cfg_.beta2) * grad[i] * grad[i];
      Real m_hat = m[i] / corr1;
      Real v_hat = v[i] / corr2;
      theta[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

}  // namespace tqs::nn
