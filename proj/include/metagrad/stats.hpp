#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>

#include "metagrad/error.hpp"

namespace metagrad {

// Regularized incomplete beta I_x(a, b) via the Lentz continued fraction
// (Numerical Recipes treatment), accurate to ~1e-14 for the small a, b used
// by t-test p-values.
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw ValueError("incomplete beta: a and b must be positive");
  if (x < 0.0 || x > 1.0) throw ValueError("incomplete beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  // Use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) where the fraction converges fastest.
  if (x > (a + 1.0) / (a + b + 2.0))
    return 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);

  const double ln_front = a * std::log(x) + b * std::log1p(-x) -
                          (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  const double tiny = 1e-300;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const double dm = static_cast<double>(m);
    // even step
    double num = dm * (b - dm) * x / ((a + 2.0 * dm - 1.0) * (a + 2.0 * dm));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    // odd step
    num = -(a + dm) * (a + b + dm) * x / ((a + 2.0 * dm) * (a + 2.0 * dm + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(ln_front) * h / a;
}

// Two-sided p-value of a t statistic with v degrees of freedom.
inline double student_t_two_sided_p(double t, double v) {
  if (v <= 0.0) throw ValueError("t-test: degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(v / 2.0, 0.5, v / (v + t * t));
}

struct PearsonResult {
  double r = 0.0;
  double p = 1.0;  // two-sided, t distribution with n-2 degrees of freedom
  std::size_t n = 0;
};

inline PearsonResult pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size())
    throw ValueError("pearson: series lengths differ (" + std::to_string(xs.size()) +
                     " vs " + std::to_string(ys.size()) + ")");
  const std::size_t n = xs.size();
  if (n < 3) throw ValueError("pearson: need at least 3 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ValueError("pearson: zero variance in a series");

  PearsonResult out;
  out.n = n;
  out.r = sxy / std::sqrt(sxx * syy);
  if (out.r > 1.0) out.r = 1.0;
  if (out.r < -1.0) out.r = -1.0;
  const double df = static_cast<double>(n - 2);
  const double denom = 1.0 - out.r * out.r;
  if (denom <= 0.0) {
    out.p = 0.0;
  } else {
    const double t = out.r * std::sqrt(df / denom);
    out.p = student_t_two_sided_p(t, df);
  }
  return out;
}

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 * sample std / sqrt(n)
};

inline MeanCi mean_ci95(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw ValueError("mean_ci95: need at least 2 samples");
  double m = 0.0;
  for (double v : samples) m += v;
  m /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : samples) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return {m, 1.96 * sd / std::sqrt(static_cast<double>(n))};
}

}  // namespace metagrad
