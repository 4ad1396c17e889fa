#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "svde/algebra.hpp"
#include "svde/brownian.hpp"
#include "svde/grid.hpp"
#include "svde/integrals.hpp"
#include "svde/kernel.hpp"

namespace svde {

/// State path X(t_i) produced by a solver, stored like a Brownian path.
struct SolutionPath {
  TimeGrid grid;
  std::size_t dim;
  Vec initial;
  std::vector<double> values;  // (N+1) x dim

  std::span<const double> at(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }
  std::span<double> at(std::size_t i) {
    return {values.data() + i * dim, dim};
  }
};

namespace detail {

inline void check_solver_inputs(const Vec& x, const BrownianPath& noise,
                                const TimeGrid& grid) {
  if (x.empty()) throw std::invalid_argument("solver: initial state must be non-empty");
  if (noise.dim != x.size())
    throw std::invalid_argument("solver: noise dimension does not match initial state");
  if (!(noise.grid == grid))
    throw std::invalid_argument("solver: noise grid does not match solver grid");
}

inline std::vector<std::vector<double>> binomial_table(unsigned max_m) {
  std::vector<std::vector<double>> binom(max_m + 1);
  for (unsigned m = 0; m <= max_m; ++m) {
    binom[m].assign(m + 1, 1.0);
    for (unsigned l = 1; l < m; ++l) binom[m][l] = binom[m - 1][l - 1] + binom[m - 1][l];
  }
  return binom;
}

// Shared state for the O(N M^2) accumulator sweep used by the Euler and
// Picard solvers: expanding (t_{i+1} - t_j)^m binomially turns the Volterra
// drift sum into running moments S_{m,l} = sum_j t_j^l g_m(t_j, X_j) dt.
class EulerSweep {
public:
  EulerSweep(const KernelSeries& kernel, std::size_t dim)
      : kernel_(kernel),
        dim_(dim),
        max_m_(kernel.max_exponent()),
        binom_(binomial_table(max_m_)),
        tpow_(max_m_ + 1, 1.0),
        gval_(dim, 0.0) {
    acc_.resize(kernel.terms().size());
    for (std::size_t tau = 0; tau < acc_.size(); ++tau)
      acc_[tau].assign((kernel.terms()[tau].exponent + 1) * dim, 0.0);
  }

  void reset() {
    for (auto& rows : acc_)
      for (double& v : rows) v = 0.0;
  }

  // Fold the node (t_i, state) into the running moments.
  void absorb(double t_i, double dt, std::span<const double> state) {
    tpow_[0] = 1.0;
    for (unsigned l = 1; l <= max_m_; ++l) tpow_[l] = tpow_[l - 1] * t_i;
    const auto& terms = kernel_.terms();
    for (std::size_t tau = 0; tau < terms.size(); ++tau) {
      terms[tau].field.evaluate_into(t_i, state, gval_);
      const unsigned m = terms[tau].exponent;
      for (unsigned l = 0; l <= m; ++l)
        axpy(tpow_[l] * dt, gval_, slot(tau, l));
    }
  }

  // drift(t) = sum_m sum_l binom(m,l) (-1)^l t^{m-l} S_{m,l}.
  void drift_at(double t, std::span<double> out) {
    for (double& v : out) v = 0.0;
    tpow_[0] = 1.0;
    for (unsigned l = 1; l <= max_m_; ++l) tpow_[l] = tpow_[l - 1] * t;
    const auto& terms = kernel_.terms();
    for (std::size_t tau = 0; tau < terms.size(); ++tau) {
      const unsigned m = terms[tau].exponent;
      for (unsigned l = 0; l <= m; ++l) {
        const double sign = (l % 2 == 0) ? 1.0 : -1.0;
        axpy(sign * binom_[m][l] * tpow_[m - l], slot(tau, l), out);
      }
    }
  }

private:
  std::span<double> slot(std::size_t tau, unsigned l) {
    return {acc_[tau].data() + l * dim_, dim_};
  }

  const KernelSeries& kernel_;
  std::size_t dim_;
  unsigned max_m_;
  std::vector<std::vector<double>> binom_;
  std::vector<double> tpow_;
  Vec gval_;
  std::vector<std::vector<double>> acc_;
};

// Gap values on the increment grid: gap((i - j) dt) covers every evaluation
// the factored scheme needs, so the (possibly long) polynomial is summed only
// N + 1 times per solve.
inline std::vector<double> gap_table(const KernelSeries& kernel, const TimeGrid& grid) {
  const auto& gap = kernel.shared_gap().gap;
  std::vector<double> values(grid.steps() + 1);
  for (std::size_t k = 0; k <= grid.steps(); ++k)
    values[k] = gap(static_cast<double>(k) * grid.dt());
  return values;
}

// Direct scheme for kernels in factored form b(t, s, x) = gap(t - s) g(s, x):
// the base field is evaluated once per node, making the sweep O(N^2 d). Used
// when the monomial accumulators would be destroyed by cancellation.
inline SolutionPath solve_euler_factored(const KernelSeries& kernel, const Vec& x,
                                         const BrownianPath& noise,
                                         const TimeGrid& grid) {
  detail::check_solver_inputs(x, noise, grid);
  const std::size_t dim = x.size();
  const std::size_t steps = grid.steps();
  const double dt = grid.dt();
  const CoefficientField& base = kernel.shared_gap().base;
  const std::vector<double> gap = gap_table(kernel, grid);

  SolutionPath path{grid, dim, x, std::vector<double>(grid.node_count() * dim, 0.0)};
  for (std::size_t c = 0; c < dim; ++c) path.values[c] = x[c];

  std::vector<double> bvals(grid.node_count() * dim, 0.0);
  Vec drift(dim, 0.0);
  for (std::size_t i = 0; i < steps; ++i) {
    base.evaluate_into(grid.node(i), path.at(i), {bvals.data() + i * dim, dim});
    for (double& v : drift) v = 0.0;
    for (std::size_t j = 0; j <= i; ++j)
      axpy(gap[i + 1 - j] * dt, {bvals.data() + j * dim, dim}, drift);
    auto next = path.at(i + 1);
    const auto noise_row = noise.at(i + 1);
    for (std::size_t c = 0; c < dim; ++c) next[c] = x[c] + drift[c] + noise_row[c];
  }
  return path;
}

}  // namespace detail

/// Left-point Euler scheme
///   X(i+1) = x + sum_{j<=i} b(t_{i+1}, t_j, X(j)) dt + B(i+1)
/// evaluated with binomial accumulators, O(N M^2) for M kernel terms instead
/// of the O(N^2 M) direct sum. Kernels whose monomial form is too
/// ill-conditioned for the accumulators are solved through their factored
/// form instead.
inline SolutionPath solve_euler(const KernelSeries& kernel, const Vec& x,
                                const BrownianPath& noise, const TimeGrid& grid) {
  if (kernel.needs_factored_evaluation())
    return detail::solve_euler_factored(kernel, x, noise, grid);
  detail::check_solver_inputs(x, noise, grid);
  const std::size_t dim = x.size();
  const std::size_t steps = grid.steps();
  const double dt = grid.dt();

  SolutionPath path{grid, dim, x, std::vector<double>(grid.node_count() * dim, 0.0)};
  for (std::size_t c = 0; c < dim; ++c) path.values[c] = x[c];

  detail::EulerSweep sweep(kernel, dim);
  Vec drift(dim, 0.0);
  for (std::size_t i = 0; i < steps; ++i) {
    sweep.absorb(grid.node(i), dt, path.at(i));
    sweep.drift_at(grid.node(i + 1), drift);
    auto next = path.at(i + 1);
    const auto noise_row = noise.at(i + 1);
    for (std::size_t c = 0; c < dim; ++c) next[c] = x[c] + drift[c] + noise_row[c];
  }
  return path;
}

/// Direct O(N^2 M) reference implementation of the same scheme.
inline SolutionPath solve_euler_naive(const KernelSeries& kernel, const Vec& x,
                                      const BrownianPath& noise, const TimeGrid& grid) {
  if (kernel.needs_factored_evaluation())
    return detail::solve_euler_factored(kernel, x, noise, grid);
  detail::check_solver_inputs(x, noise, grid);
  const std::size_t dim = x.size();
  const std::size_t steps = grid.steps();
  const double dt = grid.dt();
  const auto& terms = kernel.terms();

  SolutionPath path{grid, dim, x, std::vector<double>(grid.node_count() * dim, 0.0)};
  for (std::size_t c = 0; c < dim; ++c) path.values[c] = x[c];

  // g_m(t_j, X(j)) is evaluated once per node and reused for every later t_i.
  std::vector<std::vector<double>> gcache(terms.size());
  for (auto& rows : gcache) rows.assign(grid.node_count() * dim, 0.0);

  Vec drift(dim, 0.0);
  for (std::size_t i = 0; i < steps; ++i) {
    for (std::size_t tau = 0; tau < terms.size(); ++tau)
      terms[tau].field.evaluate_into(grid.node(i), path.at(i),
                                     {gcache[tau].data() + i * dim, dim});
    const double t_next = grid.node(i + 1);
    for (double& v : drift) v = 0.0;
    for (std::size_t tau = 0; tau < terms.size(); ++tau) {
      const unsigned m = terms[tau].exponent;
      for (std::size_t j = 0; j <= i; ++j)
        axpy(ipow(t_next - grid.node(j), m) * dt,
             {gcache[tau].data() + j * dim, dim}, drift);
    }
    auto next = path.at(i + 1);
    const auto noise_row = noise.at(i + 1);
    for (std::size_t c = 0; c < dim; ++c) next[c] = x[c] + drift[c] + noise_row[c];
  }
  return path;
}

/// Noise-free run: the Euler scheme applied with B identically zero.
inline SolutionPath solve_deterministic(const KernelSeries& kernel, const Vec& x,
                                        const TimeGrid& grid) {
  return solve_euler(kernel, x, zero_brownian(grid, x.size()), grid);
}

/// x + B as a state path; also the Picard starting point.
inline SolutionPath drift_free_path(const Vec& x, const BrownianPath& noise) {
  if (noise.dim != x.size())
    throw std::invalid_argument("drift_free_path: dimension mismatch");
  SolutionPath path{noise.grid, x.size(), x,
                    std::vector<double>(noise.values.size(), 0.0)};
  for (std::size_t i = 0; i < noise.grid.node_count(); ++i)
    for (std::size_t c = 0; c < x.size(); ++c)
      path.values[i * x.size() + c] = x[c] + noise.values[i * x.size() + c];
  return path;
}

struct PicardResult {
  SolutionPath path;
  bool converged;
  unsigned iterations;
  double last_change;  // sup-norm change of the final sweep
};

/// Picard iteration on the discrete system: starts from x + B and resweeps
/// the Euler drift against the previous iterate until the sup-norm change
/// drops below `tol`. Non-convergence within `max_iterations` is reported in
/// the result, not thrown.
inline PicardResult picard_solve(const KernelSeries& kernel, const Vec& x,
                                 const BrownianPath& noise, const TimeGrid& grid,
                                 unsigned max_iterations = 50, double tol = 1e-12) {
  detail::check_solver_inputs(x, noise, grid);
  if (max_iterations < 1)
    throw std::invalid_argument("picard_solve: need at least one iteration");
  const std::size_t dim = x.size();
  const std::size_t steps = grid.steps();
  const double dt = grid.dt();

  SolutionPath current = drift_free_path(x, noise);
  SolutionPath next = current;
  Vec drift(dim, 0.0);

  const bool factored = kernel.needs_factored_evaluation();
  std::optional<detail::EulerSweep> sweep;
  std::vector<double> gap, bvals;
  if (factored) {
    gap = detail::gap_table(kernel, grid);
    bvals.assign(grid.node_count() * dim, 0.0);
  } else {
    sweep.emplace(kernel, dim);
  }
  const CoefficientField* base = factored ? &kernel.shared_gap().base : nullptr;

  bool converged = false;
  unsigned iterations = 0;
  double change = 0.0;
  while (iterations < max_iterations) {
    change = 0.0;
    if (factored)
      for (std::size_t j = 0; j < steps; ++j)
        base->evaluate_into(grid.node(j), current.at(j), {bvals.data() + j * dim, dim});
    else
      sweep->reset();
    for (std::size_t i = 0; i < steps; ++i) {
      if (factored) {
        for (double& v : drift) v = 0.0;
        for (std::size_t j = 0; j <= i; ++j)
          axpy(gap[i + 1 - j] * dt, {bvals.data() + j * dim, dim}, drift);
      } else {
        sweep->absorb(grid.node(i), dt, current.at(i));
        sweep->drift_at(grid.node(i + 1), drift);
      }
      auto row = next.at(i + 1);
      const auto noise_row = noise.at(i + 1);
      for (std::size_t c = 0; c < dim; ++c) {
        row[c] = x[c] + drift[c] + noise_row[c];
        change = std::max(change, std::abs(row[c] - current.values[(i + 1) * dim + c]));
      }
    }
    current.values.swap(next.values);
    ++iterations;
    if (change <= tol) {
      converged = true;
      break;
    }
  }
  return {std::move(current), converged, iterations, change};
}

}  // namespace svde
