#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "svde/grid.hpp"

namespace svde {

inline double ipow(double base, unsigned exponent) {
  double result = 1.0;
  double factor = base;
  for (unsigned e = exponent; e != 0; e >>= 1) {
    if (e & 1u) result *= factor;
    factor *= factor;
  }
  return result;
}

namespace detail {

// out[i] = dt * sum_{j < i} in[j]; the left-point rule that drops the
// current node, matching an adapted Euler sum.
inline void exclusive_prefix(std::span<const double> in, std::span<double> out,
                             std::size_t dim, double dt) {
  for (std::size_t c = 0; c < dim; ++c) out[c] = 0.0;
  for (std::size_t i = 1; i * dim < in.size(); ++i)
    for (std::size_t c = 0; c < dim; ++c)
      out[i * dim + c] = out[(i - 1) * dim + c] + dt * in[(i - 1) * dim + c];
}

// out[i] = dt * sum_{j <= i} in[j].
inline void inclusive_prefix(std::span<const double> in, std::span<double> out,
                             std::size_t dim, double dt) {
  for (std::size_t c = 0; c < dim; ++c) out[c] = dt * in[c];
  for (std::size_t i = 1; i * dim < in.size(); ++i)
    for (std::size_t c = 0; c < dim; ++c)
      out[i * dim + c] = out[(i - 1) * dim + c] + dt * in[i * dim + c];
}

}  // namespace detail

/// k-fold iterated left-point integral of grid samples. Level zero is the
/// identity; each further level costs O(N), so the whole transform is O(kN).
/// `samples` holds node_count rows of `dim` values.
inline std::vector<double> iterated_integral(std::span<const double> samples,
                                             std::size_t dim, unsigned k,
                                             const TimeGrid& grid) {
  if (dim < 1) throw std::invalid_argument("iterated_integral: dimension must be positive");
  if (samples.size() != grid.node_count() * dim)
    throw std::invalid_argument("iterated_integral: sample count does not match grid");
  std::vector<double> cur(samples.begin(), samples.end());
  std::vector<double> next(cur.size());
  for (unsigned level = 0; level < k; ++level) {
    detail::exclusive_prefix(cur, next, dim, grid.dt());
    cur.swap(next);
  }
  return cur;
}

inline std::vector<double> iterated_integral(std::span<const double> samples,
                                             unsigned k, const TimeGrid& grid) {
  return iterated_integral(samples, 1, k, grid);
}

/// Maximum over grid nodes of the residual
///   | sum_{j<i} (t_i - t_j)^k f_j dt  -  k! * J^{k+1}[f](t_i) |
/// where J^{k+1} is the iterated integral with the innermost level taken
/// inclusively. That pairing makes the two sides identical discrete sums
/// after reordering for k <= 1, and leaves an O(dt) defect for k >= 2; it is
/// the discrete footprint of the Cauchy repeated-integration formula.
inline double cauchy_check(std::span<const double> f, unsigned k,
                           const TimeGrid& grid) {
  if (f.size() != grid.node_count())
    throw std::invalid_argument("cauchy_check: sample count does not match grid");
  const std::size_t n = f.size();
  const double dt = grid.dt();

  std::vector<double> rhs(f.begin(), f.end());
  std::vector<double> next(n);
  if (k >= 1) {
    detail::inclusive_prefix(rhs, next, 1, dt);
    rhs.swap(next);
    for (unsigned level = 0; level < k; ++level) {
      detail::exclusive_prefix(rhs, next, 1, dt);
      rhs.swap(next);
    }
  } else {
    detail::exclusive_prefix(rhs, next, 1, dt);
    rhs.swap(next);
  }
  double k_factorial = 1.0;
  for (unsigned m = 2; m <= k; ++m) k_factorial *= static_cast<double>(m);

  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = grid.node(i);
    double lhs = 0.0;
    for (std::size_t j = 0; j < i; ++j) lhs += ipow(ti - grid.node(j), k) * f[j];
    lhs *= dt;
    worst = std::max(worst, std::abs(lhs - k_factorial * rhs[i]));
  }
  return worst;
}

}  // namespace svde
