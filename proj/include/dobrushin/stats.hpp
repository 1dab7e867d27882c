#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace dobrushin {

/// Standard normal CDF via erfc; absolute error well below 1e-12.
inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Kolmogorov-Smirnov distance between the empirical law of `sorted` (ascending)
/// and N(0,1): max_i max(|i/m - Phi(x_i)|, |(i-1)/m - Phi(x_i)|).
inline double ks_statistic_sorted(std::span<const double> sorted) {
  const double m = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double phi = normal_cdf(sorted[i]);
    d = std::max({d, std::fabs(static_cast<double>(i + 1) / m - phi), std::fabs(static_cast<double>(i) / m - phi)});
  }
  return d;
}

inline double ks_statistic(std::span<const double> samples) {
  std::vector<double> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  return ks_statistic_sorted(v);
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t m = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace dobrushin
