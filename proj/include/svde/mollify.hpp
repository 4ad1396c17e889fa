#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "svde/algebra.hpp"
#include "svde/field.hpp"
#include "svde/girsanov.hpp"
#include "svde/kernel.hpp"

namespace svde {

namespace detail {

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence; positive weights, so averaging never expands sup
/// bounds.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussLegendre gauss_legendre(std::size_t q) {
  if (q < 2) throw std::invalid_argument("gauss_legendre: need at least two points");
  GaussLegendre rule;
  rule.nodes.resize(q);
  rule.weights.resize(q);
  const double n = static_cast<double>(q);
  for (std::size_t i = 0; i < q; ++i) {
    // Chebyshev-like initial guess for the i-th root.
    double x = std::cos(3.14159265358979323846 * (static_cast<double>(i) + 0.75) /
                        (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= q; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[q - 1 - i] = x;
    rule.weights[q - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

// exp(-1/s) extended by zero, and its derivative.
inline double bump_h(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
inline double bump_h_prime(double s) {
  return s > 0.0 ? std::exp(-1.0 / s) / (s * s) : 0.0;
}

/// Smooth cutoff: identically one on |x| <= 9, identically zero on |x| >= 10,
/// a C-infinity partition-of-unity ramp in between. It confines mollified
/// fields to a fixed ball so they stay bounded with bounded derivatives.
inline double cutoff(double r) {
  const double a = bump_h(10.0 - r);
  const double b = bump_h(r - 9.0);
  return a + b > 0.0 ? a / (a + b) : 0.0;
}

inline double cutoff_derivative(double r) {
  const double a = bump_h(10.0 - r);
  const double b = bump_h(r - 9.0);
  if (a + b <= 0.0 || a == 0.0 || b == 0.0) return 0.0;
  const double ap = -bump_h_prime(10.0 - r);
  const double bp = bump_h_prime(r - 9.0);
  return (ap * b - a * bp) / ((a + b) * (a + b));
}

// Precomputed tensor quadrature against the standard bump
// psi(z) = exp(-1/(1 - |z|^2)) on the unit ball.
struct BumpQuadrature {
  std::size_t dim;
  std::size_t count;
  std::vector<double> nodes;         // count x dim
  std::vector<double> bump_weights;  // w_I * psi(z_I)
  std::vector<double> grad_weights;  // count x dim, w_I * grad psi(z_I)
  double normalizer;                 // sum of bump_weights

  std::span<const double> node(std::size_t i) const { return {nodes.data() + i * dim, dim}; }
  std::span<const double> grad_weight(std::size_t i) const {
    return {grad_weights.data() + i * dim, dim};
  }
};

inline std::shared_ptr<const BumpQuadrature> bump_quadrature(std::size_t dim,
                                                             std::size_t q) {
  const GaussLegendre rule = gauss_legendre(q);
  auto quad = std::make_shared<BumpQuadrature>();
  quad->dim = dim;
  quad->count = 0;
  quad->normalizer = 0.0;

  std::vector<std::size_t> idx(dim, 0);
  std::vector<double> z(dim, 0.0);
  while (true) {
    double w = 1.0;
    double r2 = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      z[c] = rule.nodes[idx[c]];
      w *= rule.weights[idx[c]];
      r2 += z[c] * z[c];
    }
    if (r2 < 1.0) {
      const double one_minus = 1.0 - r2;
      const double psi = std::exp(-1.0 / one_minus);
      quad->nodes.insert(quad->nodes.end(), z.begin(), z.end());
      quad->bump_weights.push_back(w * psi);
      const double gfac = -2.0 * psi / (one_minus * one_minus);
      for (std::size_t c = 0; c < dim; ++c)
        quad->grad_weights.push_back(w * gfac * z[c]);
      quad->normalizer += w * psi;
      ++quad->count;
    }
    std::size_t c = 0;
    while (c < dim && ++idx[c] == q) idx[c++] = 0;
    if (c == dim) break;
  }
  return quad;
}

}  // namespace detail

/// A mollified coefficient field: the base field averaged against the
/// rescaled standard bump of radius 1/level, times a fixed smooth cutoff.
/// The result is smooth with an everywhere-defined gradient, and its sup
/// bound never exceeds the base field's.
struct MollifiedField {
  unsigned level;
  double radius;
  std::size_t quad_points;
  CoefficientField field;
};

inline MollifiedField mollify_field(const CoefficientField& g, unsigned level,
                                    std::size_t quad_points, std::size_t dim) {
  if (level < 1) throw std::invalid_argument("mollify_field: level must be positive");
  if (dim < 1 || dim > 3)
    throw std::invalid_argument("mollify_field: tensor quadrature supports dimensions 1-3");
  if (quad_points < 2 || quad_points > 128)
    throw std::invalid_argument("mollify_field: quadrature size out of range");

  const auto quad = detail::bump_quadrature(dim, quad_points);
  const double radius = 1.0 / static_cast<double>(level);
  const double scale = static_cast<double>(level);

  auto eval = [quad, g, radius, dim](double s, std::span<const double> x,
                                     std::span<double> out) {
    for (double& v : out) v = 0.0;
    const double chi = detail::cutoff(std::sqrt(norm2_squared(x)));
    if (chi == 0.0) return;
    double shifted_buf[3];
    double gval_buf[3];
    std::span<double> shifted(shifted_buf, dim);
    std::span<double> gval(gval_buf, dim);
    for (std::size_t i = 0; i < quad->count; ++i) {
      const auto z = quad->node(i);
      for (std::size_t c = 0; c < dim; ++c) shifted[c] = x[c] - radius * z[c];
      g.evaluate_into(s, shifted, gval);
      axpy(quad->bump_weights[i], gval, out);
    }
    // One normalization at the end: where the base field is locally constant
    // the weight sum cancels against the normalizer exactly.
    for (double& v : out) v = chi * (v / quad->normalizer);
  };

  auto grad = [quad, g, radius, scale, dim](double s, std::span<const double> x,
                                            Mat& out) {
    for (double& v : out.data()) v = 0.0;
    const double r = std::sqrt(norm2_squared(x));
    const double chi = detail::cutoff(r);
    const double chi_prime = detail::cutoff_derivative(r);
    if (chi == 0.0 && chi_prime == 0.0) return;
    double shifted_buf[3];
    double gval_buf[3];
    double conv_buf[3] = {0.0, 0.0, 0.0};
    std::span<double> shifted(shifted_buf, dim);
    std::span<double> gval(gval_buf, dim);
    std::span<double> conv(conv_buf, dim);
    for (std::size_t i = 0; i < quad->count; ++i) {
      const auto z = quad->node(i);
      for (std::size_t c = 0; c < dim; ++c) shifted[c] = x[c] - radius * z[c];
      g.evaluate_into(s, shifted, gval);
      axpy(quad->bump_weights[i], gval, conv);
      // d/dx of the convolution lands on the bump: one factor of level.
      const auto gw = quad->grad_weight(i);
      for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b)
          out(a, b) += scale * gval[a] * gw[b];
    }
    for (double& v : out.data()) v = chi * (v / quad->normalizer);
    if (chi_prime != 0.0 && r > 0.0)
      for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b)
          out(a, b) += (conv[a] / quad->normalizer) * chi_prime * x[b] / r;
  };

  CoefficientField field("mollify(" + g.name() + ",n=" + std::to_string(level) + ")",
                         g.sup_bound(), std::move(eval), std::move(grad));
  return {level, radius, quad_points, std::move(field)};
}

/// Mollify every coefficient of a kernel series at the given level. A shared
/// factored form survives with its base field mollified, because mollification
/// commutes with the scalar coefficients of the terms.
inline KernelSeries mollify_kernel(const KernelSeries& kernel, unsigned level,
                                   std::size_t quad_points, std::size_t dim) {
  std::vector<KernelTerm> terms;
  terms.reserve(kernel.terms().size());
  for (const KernelTerm& term : kernel.terms())
    terms.push_back(
        {term.exponent, mollify_field(term.field, level, quad_points, dim).field});
  std::optional<KernelSeries::SharedGap> shared;
  if (kernel.has_shared_gap())
    shared = KernelSeries::SharedGap{
        mollify_field(kernel.shared_gap().base, level, quad_points, dim).field,
        kernel.shared_gap().gap};
  return KernelSeries(std::move(terms), kernel.horizon(), std::move(shared));
}

struct WeakConvergenceStudy {
  std::vector<unsigned> levels;
  std::vector<EstimatorResult> estimates;  // Euler estimate per level
  EstimatorResult reference;               // Girsanov estimate, unmollified kernel
};

/// Weak-convergence table: the Euler estimator of E[phi(X(t))] under each
/// approximating kernel, against the Girsanov weak estimator of the limiting
/// kernel. All columns share one seed, hence common random numbers.
inline WeakConvergenceStudy weak_convergence_study(
    std::span<const KernelSeries> level_kernels, std::span<const unsigned> level_ids,
    const KernelSeries& reference_kernel, const Vec& x, const ScalarFn& phi,
    std::size_t t_index, const TimeGrid& grid, std::size_t n_paths,
    std::uint64_t seed) {
  if (level_kernels.empty())
    throw std::invalid_argument("weak_convergence_study: no kernel levels");
  if (level_kernels.size() != level_ids.size())
    throw std::invalid_argument("weak_convergence_study: level ids do not match kernels");
  WeakConvergenceStudy study;
  study.levels.assign(level_ids.begin(), level_ids.end());
  for (const KernelSeries& kernel : level_kernels)
    study.estimates.push_back(
        euler_estimator(kernel, x, phi, t_index, grid, n_paths, seed));
  study.reference = weak_estimator(reference_kernel, x, phi, t_index, grid,
                                   n_paths, seed);
  return study;
}

}  // namespace svde
