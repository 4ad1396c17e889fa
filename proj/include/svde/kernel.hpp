#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "svde/algebra.hpp"
#include "svde/field.hpp"

namespace svde {

/// One power-series term (t - s)^exponent * field(s, x).
struct KernelTerm {
  unsigned exponent;
  CoefficientField field;
};

/// A two-time kernel b(t, s, x) = sum_m (t - s)^m g_m(s, x) given by finitely
/// many terms with strictly increasing exponents.
///
/// Some kernels factor as b(t, s, x) = gap(t - s) * g(s, x) with a single base
/// field; factories for such kernels install that factored form alongside the
/// terms. Evaluation prefers it because the factored polynomial can be summed
/// in a numerically benign basis even when the monomial coefficients are
/// astronomically large (the long fractional expansions below are the prime
/// example). Both representations are built from the same coefficients.
class KernelSeries {
public:
  struct SharedGap {
    CoefficientField base;
    std::function<double(double)> gap;  // gap(t - s)
  };

  KernelSeries(std::vector<KernelTerm> terms, double horizon,
               std::optional<SharedGap> shared = std::nullopt)
      : terms_(std::move(terms)), horizon_(horizon), shared_(std::move(shared)) {
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
      throw std::invalid_argument("KernelSeries: horizon must be finite and positive");
    for (std::size_t i = 1; i < terms_.size(); ++i)
      if (terms_[i].exponent <= terms_[i - 1].exponent)
        throw std::invalid_argument("KernelSeries: exponents must be strictly increasing");
    tail_bound_ = 0.0;
    amplification_ = 0.0;
    for (const KernelTerm& term : terms_) {
      const double e = static_cast<double>(term.exponent);
      tail_bound_ += std::pow(horizon_, e) * term.field.sup_bound();
      amplification_ += std::pow(2.0 * horizon_, e) * term.field.sup_bound();
    }
    if (shared_) {
      // scale of the kernel in its factored form, for the conditioning test
      // below; the monomial tail bound can overstate it by many orders when
      // the coefficients alternate.
      double gap_sup = 0.0;
      for (int p = 0; p <= 128; ++p)
        gap_sup = std::max(
            gap_sup, std::abs(shared_->gap(horizon_ * static_cast<double>(p) / 128.0)));
      factored_scale_ = gap_sup * shared_->base.sup_bound();
    }
  }

  const std::vector<KernelTerm>& terms() const { return terms_; }
  double horizon() const { return horizon_; }
  bool empty() const { return terms_.empty(); }
  bool has_shared_gap() const { return shared_.has_value(); }

  const SharedGap& shared_gap() const {
    if (!shared_) throw std::logic_error("KernelSeries: no shared factored form");
    return *shared_;
  }

  /// Largest intermediate magnitude, sum_m sup|g_m| (2T)^m, that the
  /// binomially expanded monomial sweeps can produce.
  double monomial_amplification() const { return amplification_; }

  /// True when a factored form exists and the monomial sweeps would lose more
  /// than about ten decimal digits to cancellation against the factored scale
  /// of the kernel. Solvers switch to direct factored evaluation in that case.
  bool needs_factored_evaluation() const {
    return shared_.has_value() &&
           amplification_ > 1e10 * std::max(factored_scale_, 1e-300);
  }

  /// sum_m T^m * sup|g_m|: finite by construction, reported as the
  /// summability margin of the series on [0, T].
  double tail_bound() const { return tail_bound_; }

  unsigned max_exponent() const {
    return terms_.empty() ? 0u : terms_.back().exponent;
  }

  bool has_gradients() const {
    for (const KernelTerm& term : terms_)
      if (!term.field.has_gradient()) return false;
    return true;
  }

  void evaluate_into(double t, double s, std::span<const double> x,
                     std::span<double> out, std::span<double> scratch) const {
    check_times(t, s);
    for (double& v : out) v = 0.0;
    if (shared_) {
      shared_->base.evaluate_into(s, x, out);
      const double c = shared_->gap(t - s);
      for (double& v : out) v *= c;
      return;
    }
    const double u = t - s;
    for (const KernelTerm& term : terms_) {
      term.field.evaluate_into(s, x, scratch);
      axpy(std::pow(u, static_cast<double>(term.exponent)), scratch, out);
    }
  }

  Vec evaluate(double t, double s, std::span<const double> x) const {
    Vec out(x.size(), 0.0);
    Vec scratch(x.size(), 0.0);
    evaluate_into(t, s, x, out, scratch);
    return out;
  }

  void gradient_into(double t, double s, std::span<const double> x, Mat& out,
                     Mat& scratch) const {
    check_times(t, s);
    for (double& v : out.data()) v = 0.0;
    if (shared_) {
      shared_->base.gradient_into(s, x, out);
      out *= shared_->gap(t - s);
      return;
    }
    const double u = t - s;
    for (const KernelTerm& term : terms_) {
      term.field.gradient_into(s, x, scratch);
      axpy(std::pow(u, static_cast<double>(term.exponent)), scratch, out);
    }
  }

  Mat gradient(double t, double s, std::span<const double> x) const {
    Mat out(x.size());
    Mat scratch(x.size());
    gradient_into(t, s, x, out, scratch);
    return out;
  }

private:
  static void check_times(double t, double s) {
    if (s > t)
      throw std::invalid_argument("KernelSeries: evaluation requires s <= t");
  }

  std::vector<KernelTerm> terms_;
  double horizon_;
  std::optional<SharedGap> shared_;
  double tail_bound_ = 0.0;
  double amplification_ = 0.0;
  double factored_scale_ = 0.0;
};

inline Vec eval_kernel(const KernelSeries& kernel, double t, double s,
                       std::span<const double> x) {
  return kernel.evaluate(t, s, x);
}

/// Coefficients of the sine gap: coeff[k] = (-1)^k / (2k+1)! for the monomial
/// of exponent 2k+1. Templated on the arithmetic type so tests can evaluate
/// the same formula in extended precision.
template <typename Real>
std::vector<Real> sin_gap_coefficients(unsigned k_max) {
  std::vector<Real> coeff(k_max + 1);
  Real factorial = 1;  // (2k+1)!
  for (unsigned k = 0; k <= k_max; ++k) {
    if (k > 0) factorial *= Real(2 * k) * Real(2 * k + 1);
    coeff[k] = ((k % 2 == 0) ? Real(1) : Real(-1)) / factorial;
  }
  return coeff;
}

/// Truncated sine kernel b(t, s, x) = sum_{k<=k_max} (-1)^k/(2k+1)! (t-s)^{2k+1} g(s, x),
/// the degree-(2k_max+1) Taylor approximation of sin(t - s) * g(s, x).
inline KernelSeries sin_kernel(const CoefficientField& g, unsigned k_max,
                               double horizon) {
  const std::vector<double> coeff = sin_gap_coefficients<double>(k_max);
  std::vector<KernelTerm> terms;
  terms.reserve(coeff.size());
  for (unsigned k = 0; k <= k_max; ++k)
    terms.push_back({2 * k + 1, scale_field(coeff[k], g)});

  auto gap = [coeff](double u) {
    // Horner in u^2, then one factor of u.
    const double u2 = u * u;
    double acc = coeff.back();
    for (std::size_t k = coeff.size() - 1; k-- > 0;) acc = acc * u2 + coeff[k];
    return acc * u;
  };
  return KernelSeries(std::move(terms), horizon,
                      KernelSeries::SharedGap{g, std::move(gap)});
}

/// Generalized binomial coefficients binom(alpha, n), n = 0..n_max. For
/// alpha in (-1/2, 0) they alternate in sign and decay like n^(alpha - 1),
/// so sum_n binom(alpha, n) (u-1)^n converges absolutely for |u - 1| < 1.
template <typename Real>
std::vector<Real> fractional_shifted_coefficients(Real alpha, unsigned n_max) {
  std::vector<Real> b(n_max + 1);
  b[0] = 1;
  for (unsigned n = 1; n <= n_max; ++n)
    b[n] = b[n - 1] * (alpha - Real(n - 1)) / Real(n);
  return b;
}

/// Monomial coefficients c_k with sum_k c_k u^k = sum_n binom(alpha, n) (u-1)^n.
/// The inner sum over n is all-positive, so each c_k is computed without
/// cancellation; the c_k themselves grow combinatorially in n_max, which is
/// why evaluation goes through the shifted basis instead.
inline std::vector<double> fractional_monomial_coefficients(double alpha,
                                                            unsigned n_max) {
  std::vector<double> beta(n_max + 1);  // |binom(alpha, n)|
  beta[0] = 1.0;
  for (unsigned n = 1; n <= n_max; ++n)
    beta[n] = beta[n - 1] * (static_cast<double>(n - 1) - alpha) / static_cast<double>(n);

  std::vector<double> c(n_max + 1);
  for (unsigned k = 0; k <= n_max; ++k) {
    double binom_nk = 1.0;  // binom(n, k), rolled upward in n
    double sum = 0.0;
    for (unsigned n = k; n <= n_max; ++n) {
      if (n > k) binom_nk *= static_cast<double>(n) / static_cast<double>(n - k);
      sum += beta[n] * binom_nk;
    }
    c[k] = (k % 2 == 0) ? sum : -sum;
  }
  return c;
}

/// Truncated fractional kernel: the degree-n_max expansion of (t-s)^alpha * g(s,x)
/// around t-s = 1, rewritten as a power series in (t-s). Requires
/// alpha in (-1/2, 0) and horizon < 2 so that the expansion converges on the
/// whole triangle {0 <= s <= t <= T}.
inline KernelSeries fractional_kernel(double alpha, const CoefficientField& g,
                                      unsigned n_max, double horizon) {
  if (!(alpha > -0.5) || !(alpha < 0.0))
    throw std::invalid_argument("fractional_kernel: alpha must lie in (-1/2, 0)");
  if (!(horizon < 2.0))
    throw std::invalid_argument("fractional_kernel: horizon must be below 2");
  if (n_max < 1) throw std::invalid_argument("fractional_kernel: n_max must be positive");
  if (n_max > 600)
    throw std::invalid_argument(
        "fractional_kernel: n_max above 600 overflows the monomial bounds");

  const std::vector<double> c = fractional_monomial_coefficients(alpha, n_max);
  std::vector<KernelTerm> terms;
  terms.reserve(c.size());
  for (unsigned k = 0; k <= n_max; ++k)
    terms.push_back({k, scale_field(c[k], g)});

  const std::vector<double> b = fractional_shifted_coefficients<double>(alpha, n_max);
  auto gap = [b](double u) {
    // Horner in (u - 1): exact reordering of the monomial sum, and stable
    // because the terms are positive for u < 1 and decaying-alternating for
    // u in (1, 2).
    const double w = u - 1.0;
    double acc = b.back();
    for (std::size_t n = b.size() - 1; n-- > 0;) acc = acc * w + b[n];
    return acc;
  };
  return KernelSeries(std::move(terms), horizon,
                      KernelSeries::SharedGap{g, std::move(gap)});
}

}  // namespace svde
