#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "metagrad/model.hpp"

namespace metagrad {

struct GradReport {
  std::vector<double> relative_error;  // per parameter, flat layer-major order
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Builds a fresh scalar loss graph from the given leaves; called many times,
// so it must be a pure function of the leaf values.
using ParamLossFn = std::function<Tensor(const ParamLeaves&)>;

// Central-difference check of reverse-mode gradients. Per-parameter error is
// |g_ad - g_fd| / max(1e-12, |g_ad| + |g_fd|).
inline GradReport finite_diff_check(const LayeredParams& params,
                                    const ParamLossFn& loss_fn, double step) {
  if (!(step > 0.0) || !std::isfinite(step))
    throw ValueError("finite_diff_check: step must be positive and finite");

  auto loss_value = [&](const LayeredParams& q) {
    ParamLeaves lv = make_leaves(q);
    const double v = loss_fn(lv).value();
    if (!std::isfinite(v)) throw NumericError("finite_diff_check: non-finite loss");
    return v;
  };

  // Analytic gradients once, flattened in param_at order.
  ParamLeaves leaves = make_leaves(params);
  Tensor loss = loss_fn(leaves);
  if (!std::isfinite(loss.value()))
    throw NumericError("finite_diff_check: non-finite loss");
  backward(loss);
  LayeredParams analytic = param_zero_like(params);
  extract_grads(leaves, analytic);

  const std::size_t n = params.parameter_count();
  GradReport report;
  report.relative_error.resize(n);
  report.checked = n;

  LayeredParams probe = params;
  for (std::size_t i = 0; i < n; ++i) {
    double* slot = param_at(probe, i);
    const double original = *slot;
    *slot = original + step;
    const double up = loss_value(probe);
    *slot = original - step;
    const double down = loss_value(probe);
    *slot = original;

    const double fd = (up - down) / (2.0 * step);
    const double ad = *param_at(analytic, i);
    const double denom = std::max(1e-12, std::abs(ad) + std::abs(fd));
    const double rel = std::abs(ad - fd) / denom;
    report.relative_error[i] = rel;
    if (rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_index = i;
    }
  }
  return report;
}

}  // namespace metagrad
