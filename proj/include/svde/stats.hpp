#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace svde {

struct MeanSE {
  double mean;
  double std_error;
};

/// Two-pass sample mean and standard error of the mean.
inline MeanSE mean_se(std::span<const double> values) {
  if (values.size() < 2)
    throw std::invalid_argument("mean_se: need at least two samples");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double variance = ss / (n - 1.0);
  return {mean, std::sqrt(variance / n)};
}

/// Effective sample size (sum w)^2 / sum w^2 of importance weights.
inline double effective_sample_size(std::span<const double> weights) {
  if (weights.empty())
    throw std::invalid_argument("effective_sample_size: empty weight list");
  double s = 0.0, s2 = 0.0;
  for (double w : weights) {
    s += w;
    s2 += w * w;
  }
  if (s2 == 0.0) return 0.0;
  return s * s / s2;
}

/// Ordinary least-squares slope of y against x.
inline double least_squares_slope(std::span<const double> x,
                                  std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("least_squares_slope: need two matched samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0)
    throw std::invalid_argument("least_squares_slope: regressor is constant");
  return sxy / sxx;
}

/// Empirical quantile by sorting a copy; q in [0, 1].
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

}  // namespace svde
