#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace purify {

/// Monte Carlo mean with its standard error (sample sd / sqrt(samples)).
struct McEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;

  /// |mean - target| <= k * stderr + slack
  bool agrees_with(double target, double k_sigma, double slack) const {
    return std::abs(mean - target) <= k_sigma * standard_error + slack;
  }
};

namespace stats {

/// Pairwise (cascade) summation; result independent of how the values were produced.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

inline double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  return pairwise_sum(v) / static_cast<double>(v.size());
}

inline McEstimate estimate(std::span<const double> v) {
  if (v.size() < 2) throw std::invalid_argument("McEstimate needs at least two samples");
  const double m = mean(v);
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
  const double var = pairwise_sum(sq) / static_cast<double>(v.size() - 1);
  return {m, std::sqrt(var / static_cast<double>(v.size())), v.size()};
}

/// Estimate of Var[x] given per-sample x, as mean(x^2) - mean(x)^2, with a
/// delta-method standard error built from the influence x^2 - 2 mean(x) x.
inline McEstimate variance_estimate(std::span<const double> first, std::span<const double> second) {
  if (first.size() != second.size() || first.size() < 2)
    throw std::invalid_argument("variance_estimate: mismatched or too few samples");
  const double m1 = mean(first);
  std::vector<double> infl(first.size());
  for (std::size_t i = 0; i < first.size(); ++i) infl[i] = second[i] - 2.0 * m1 * first[i];
  McEstimate e = estimate(infl);
  e.mean = mean(second) - m1 * m1;
  return e;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares: need >= 2 points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace stats
}  // namespace purify
