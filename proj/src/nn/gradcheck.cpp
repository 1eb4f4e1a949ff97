#include "tqs/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace tqs::nn {

GradCheckReport grad_check(const std::function<Real()>& loss,
                           const std::function<void()>& compute_grads,
                           const std::vector<ParamRef>& refs, Rng& rng,
                           const GradCheckOptions& options) {
  Real l1 = loss(), l2 = loss();
  if (std::isnan(l1) || std::isnan(l2)) throw DivergenceError("grad_check: loss is NaN");
  if (l1 != l2) throw ConfigError("grad_check: forward pass is not deterministic");

  compute_grads();
  std::vector<Real> analytic = flatten_grads(refs);

  const size_t total = analytic.size();
  std::vector<size_t> coords;
  if (total <= options.sample) {
    coords.resize(total);
    for (size_t i = 0; i < total; ++i) coords[i] = i;
  } else {
    // Partial Fisher-Yates over the index range.
    std::vector<size_t> pool(total);
    for (size_t i = 0; i < total; ++i) pool[i] = i;
    for (size_t i = 0; i < options.sample; ++i)
      std::swap(pool[i], pool[i + rng.index(total - i)]);
    coords.assign(pool.begin(), pool.begin() + options.sample);
  }

  GradCheckReport report;
  report.checked = coords.size();
  for (size_t idx : coords) {
    add_flat_value(refs, idx, options.step);
    Real up = loss();
    add_flat_value(refs, idx, -2 * options.step);
    Real down = loss();
    add_flat_value(refs, idx, options.step);

    Real numeric = (up - down) / (2 * options.step);
    Real a = analytic[idx];
    Real rel = std::abs(a - numeric) /
               std::max({options.guard, std::abs(a), std::abs(numeric)});
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_coord = describe_flat(refs, idx);
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

}  // namespace tqs::nn
