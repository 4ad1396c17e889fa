#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "svde/algebra.hpp"
#include "svde/brownian.hpp"
#include "svde/girsanov.hpp"
#include "svde/grid.hpp"
#include "svde/kernel.hpp"
#include "svde/parallel.hpp"
#include "svde/solver.hpp"
#include "svde/stats.hpp"

namespace svde {

namespace detail {

// Factored variant of the recursion below, for kernels whose gradient is
// gap(t - s) Dg(s, x): each node's product Dg(t_j, X_j) M(j) is formed once
// and the gap polynomial is read from the increment table.
inline std::vector<Mat> derivative_sweep_factored(const KernelSeries& kernel,
                                                  const SolutionPath& state,
                                                  std::size_t start, const Mat& init) {
  const std::size_t dim = state.dim;
  const double dt = state.grid.dt();
  const std::vector<double> gap = gap_table(kernel, state.grid);
  const CoefficientField& base = kernel.shared_gap().base;

  std::vector<Mat> out;
  out.reserve(state.grid.steps() - start + 1);
  out.push_back(init);

  std::vector<Mat> products;  // Dg(t_j, X_j) M(j), j = start, ...
  products.reserve(state.grid.steps() - start);
  Mat grad(dim);
  for (std::size_t i = start; i < state.grid.steps(); ++i) {
    base.gradient_into(state.grid.node(i), state.at(i), grad);
    products.push_back(grad * out.back());
    Mat next = init;
    for (std::size_t j = start; j <= i; ++j)
      axpy(gap[i + 1 - j] * dt, products[j - start], next);
    out.push_back(std::move(next));
  }
  return out;
}

// Linear Volterra recursion shared by the Malliavin and flow derivatives:
//   M(i) = init + sum_{j=start}^{i-1} Db(t_i, t_j, X(j)) M(j) dt,  M(start) = init,
// with Db expanded binomially exactly like the state solver, so the result is
// the exact Jacobian of the discrete Euler map.
inline std::vector<Mat> derivative_sweep(const KernelSeries& kernel,
                                         const SolutionPath& state,
                                         std::size_t start, const Mat& init) {
  if (!kernel.has_gradients())
    throw std::invalid_argument(
        "derivative equation requires gradients for every kernel term");
  if (start > state.grid.steps())
    throw std::invalid_argument("derivative equation: start index past end of grid");
  if (init.dim() != state.dim)
    throw std::invalid_argument("derivative equation: initial matrix dimension mismatch");
  if (kernel.needs_factored_evaluation())
    return derivative_sweep_factored(kernel, state, start, init);

  const std::size_t dim = state.dim;
  const double dt = state.grid.dt();
  const auto& terms = kernel.terms();
  const unsigned max_m = kernel.max_exponent();
  const auto binom = binomial_table(max_m);

  std::vector<Mat> out;
  out.reserve(state.grid.steps() - start + 1);
  out.push_back(init);

  // acc[tau][l] = sum_j t_j^l Dg_m(t_j, X_j) M(j) dt
  std::vector<std::vector<Mat>> acc(terms.size());
  for (std::size_t tau = 0; tau < terms.size(); ++tau)
    acc[tau].assign(terms[tau].exponent + 1, Mat(dim));

  std::vector<double> tpow(max_m + 1, 1.0);
  Mat grad(dim);
  for (std::size_t i = start; i < state.grid.steps(); ++i) {
    const double t_i = state.grid.node(i);
    tpow[0] = 1.0;
    for (unsigned l = 1; l <= max_m; ++l) tpow[l] = tpow[l - 1] * t_i;
    const Mat& current = out.back();
    for (std::size_t tau = 0; tau < terms.size(); ++tau) {
      terms[tau].field.gradient_into(t_i, state.at(i), grad);
      const Mat product = grad * current;
      for (unsigned l = 0; l <= terms[tau].exponent; ++l)
        axpy(tpow[l] * dt, product, acc[tau][l]);
    }
    const double t_next = state.grid.node(i + 1);
    tpow[0] = 1.0;
    for (unsigned l = 1; l <= max_m; ++l) tpow[l] = tpow[l - 1] * t_next;
    Mat next = init;
    for (std::size_t tau = 0; tau < terms.size(); ++tau) {
      const unsigned m = terms[tau].exponent;
      for (unsigned l = 0; l <= m; ++l) {
        const double sign = (l % 2 == 0) ? 1.0 : -1.0;
        axpy(sign * binom[m][l] * tpow[m - l], acc[tau][l], next);
      }
    }
    out.push_back(std::move(next));
  }
  return out;
}

}  // namespace detail

/// Malliavin derivative D_u X(t) along one state path: entries for
/// t = t_u, ..., t_N with D_u X(t_u) = I.
inline std::vector<Mat> malliavin_derivative(const KernelSeries& kernel,
                                             const SolutionPath& state,
                                             std::size_t u_index) {
  return detail::derivative_sweep(kernel, state, u_index,
                                  Mat::identity(state.dim));
}

/// Flow derivative dX(t)/dx along one state path, for all grid nodes. With
/// `init` = I this is the exact Jacobian of the discrete Euler map, so a
/// common-noise finite difference converges to it without an O(dt) gap.
inline std::vector<Mat> flow_derivative(const KernelSeries& kernel,
                                        const SolutionPath& state,
                                        const Mat& init) {
  return detail::derivative_sweep(kernel, state, 0, init);
}

inline std::vector<Mat> flow_derivative(const KernelSeries& kernel,
                                        const SolutionPath& state) {
  return flow_derivative(kernel, state, Mat::identity(state.dim));
}

enum class DerivativeKind { malliavin, flow };

/// Table of derivative matrices along one path, for a set of differentiation
/// bases: Malliavin entries start at each u, the flow entry starts at zero.
struct DerivativeField {
  DerivativeKind kind;
  TimeGrid grid;
  std::size_t dim;
  std::vector<std::size_t> u_indices;
  std::vector<std::vector<Mat>> rows;  // rows[k][j] = derivative at t_{u_k + j}

  const Mat& at(std::size_t u_pos, std::size_t t_index) const {
    const std::size_t u = u_indices.at(u_pos);
    if (t_index < u || t_index > grid.steps())
      throw std::out_of_range("DerivativeField::at: time index outside [u, N]");
    return rows[u_pos][t_index - u];
  }
};

inline DerivativeField malliavin_field(const KernelSeries& kernel,
                                       const SolutionPath& state,
                                       std::vector<std::size_t> u_indices) {
  DerivativeField field{DerivativeKind::malliavin, state.grid, state.dim,
                        std::move(u_indices), {}};
  field.rows.reserve(field.u_indices.size());
  for (std::size_t u : field.u_indices)
    field.rows.push_back(malliavin_derivative(kernel, state, u));
  return field;
}

inline DerivativeField flow_field(const KernelSeries& kernel,
                                  const SolutionPath& state) {
  DerivativeField field{DerivativeKind::flow, state.grid, state.dim, {0}, {}};
  field.rows.push_back(flow_derivative(kernel, state));
  return field;
}

struct HolderStatistic {
  double slope;      // log-log regression of L2 differences on separations
  double ci_lower;   // bootstrap 95% interval over path resamples
  double ci_upper;
  bool degenerate;   // differences vanish identically (state-independent kernel)
  std::vector<double> separations;
  std::vector<double> l2_differences;
};

/// Monte Carlo Hoelder statistic of u -> D_u X(T): estimates
/// E|D_r X(T) - D_v X(T)|_F^2 for each supplied index pair and regresses the
/// log L2 norms on log separations. A positive slope is evidence for the
/// Hoelder-continuity hypothesis of the sensitivity compactness argument.
inline HolderStatistic holder_statistic(
    const KernelSeries& kernel, const Vec& x, const TimeGrid& grid,
    std::size_t n_paths, std::uint64_t seed,
    std::span<const std::pair<std::size_t, std::size_t>> u_pairs,
    std::size_t bootstrap_rounds = 200) {
  if (u_pairs.size() < 2)
    throw std::invalid_argument("holder_statistic: need at least two index pairs");
  if (n_paths < 2)
    throw std::invalid_argument("holder_statistic: need at least two paths");
  for (const auto& [r, v] : u_pairs)
    if (r == v || r > grid.steps() || v > grid.steps())
      throw std::invalid_argument("holder_statistic: invalid index pair");

  // Distinct differentiation bases, so each path runs each recursion once.
  std::vector<std::size_t> bases;
  for (const auto& [r, v] : u_pairs) {
    bases.push_back(r);
    bases.push_back(v);
  }
  std::sort(bases.begin(), bases.end());
  bases.erase(std::unique(bases.begin(), bases.end()), bases.end());
  auto base_pos = [&bases](std::size_t u) {
    return static_cast<std::size_t>(
        std::lower_bound(bases.begin(), bases.end(), u) - bases.begin());
  };

  const std::size_t n_pairs = u_pairs.size();
  std::vector<double> sqdiff(n_paths * n_pairs, 0.0);
  parallel_for_index(n_paths, [&](std::size_t p) {
    const BrownianPath noise = sample_brownian(grid, x.size(), seed, p);
    const SolutionPath state = solve_euler(kernel, x, noise, grid);
    std::vector<Mat> terminals(bases.size());
    for (std::size_t k = 0; k < bases.size(); ++k)
      terminals[k] = malliavin_derivative(kernel, state, bases[k]).back();
    for (std::size_t q = 0; q < n_pairs; ++q) {
      const Mat diff = terminals[base_pos(u_pairs[q].first)] -
                       terminals[base_pos(u_pairs[q].second)];
      const double norm = diff.frobenius_norm();
      sqdiff[p * n_pairs + q] = norm * norm;
    }
  });

  HolderStatistic stat{0.0, 0.0, 0.0, false, {}, {}};
  stat.separations.resize(n_pairs);
  stat.l2_differences.resize(n_pairs);
  std::vector<double> log_sep(n_pairs), log_l2(n_pairs);
  bool degenerate = false;
  for (std::size_t q = 0; q < n_pairs; ++q) {
    double mean = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) mean += sqdiff[p * n_pairs + q];
    mean /= static_cast<double>(n_paths);
    const double sep = std::abs(grid.node(u_pairs[q].first) - grid.node(u_pairs[q].second));
    stat.separations[q] = sep;
    stat.l2_differences[q] = std::sqrt(mean);
    if (!(mean > 1e-300)) degenerate = true;
    log_sep[q] = std::log(sep);
    log_l2[q] = degenerate ? 0.0 : 0.5 * std::log(mean);
  }
  if (degenerate) {
    stat.degenerate = true;
    return stat;
  }
  stat.slope = least_squares_slope(log_sep, log_l2);

  // Percentile bootstrap over path resamples; resampling is counter-based so
  // the interval is as reproducible as the estimate itself.
  const std::uint64_t boot_seed = seed ^ 0x9E3779B97F4A7C15ull;
  std::vector<double> slopes(bootstrap_rounds, 0.0);
  std::vector<double> boot_log_l2(n_pairs);
  std::vector<double> means(n_pairs);
  for (std::size_t r = 0; r < bootstrap_rounds; ++r) {
    for (double& m : means) m = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      const std::uint64_t pick = rng::uniform_index(boot_seed, r, p, n_paths);
      for (std::size_t q = 0; q < n_pairs; ++q)
        means[q] += sqdiff[pick * n_pairs + q];
    }
    bool bad = false;
    for (std::size_t q = 0; q < n_pairs; ++q) {
      if (!(means[q] > 0.0)) bad = true;
      boot_log_l2[q] = bad ? 0.0 : 0.5 * std::log(means[q] / static_cast<double>(n_paths));
    }
    slopes[r] = bad ? 0.0 : least_squares_slope(log_sep, boot_log_l2);
  }
  stat.ci_lower = quantile(slopes, 0.025);
  stat.ci_upper = quantile(slopes, 0.975);
  return stat;
}

/// Index pairs (v + k, v) anchored at v = N/2 with separations close to
/// {2^-6, ..., 2^-2} of the horizon; exact when N is divisible by 64.
inline std::vector<std::pair<std::size_t, std::size_t>> default_holder_pairs(
    const TimeGrid& grid) {
  if (grid.steps() < 128)
    throw std::invalid_argument("default_holder_pairs: need at least 128 steps");
  const std::size_t v = grid.steps() / 2;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (int e = 6; e >= 2; --e) {
    const double frac = std::ldexp(1.0, -e);
    const auto offset = static_cast<std::size_t>(
        std::llround(frac * static_cast<double>(grid.steps())));
    pairs.emplace_back(v + std::max<std::size_t>(offset, 1), v);
  }
  return pairs;
}

struct LevelStatistics {
  double terminal_l2;            // E|X(T)|^2 under the level's kernel, square-rooted
  double terminal_l2_se;
  double sup_derivative_l2;      // sqrt E sup_{u in probes, t >= u} |D_u X(t)|_F^2
  double sup_derivative_l2_se;
  double holder_slope;
  bool holder_degenerate;
};

struct CompactnessReport {
  std::vector<LevelStatistics> levels;
  bool state_bounded;       // terminal L2 shows no growth across levels at 3 SE
  bool derivative_bounded;  // same for the derivative sup
};

/// Monte Carlo check of the three hypotheses behind the tightness argument
/// for a family of approximating kernels: uniformly bounded second moments,
/// uniformly bounded Malliavin derivatives, and a positive Hoelder slope of
/// u -> D_u X(T). Each level is summarized with standard errors; the trend
/// flags compare the last level against the first.
inline CompactnessReport compactness_hypothesis_check(
    std::span<const KernelSeries> levels, const Vec& x, const TimeGrid& grid,
    std::size_t n_paths, std::uint64_t seed) {
  if (levels.empty())
    throw std::invalid_argument("compactness_hypothesis_check: no kernel levels");
  if (n_paths < 2)
    throw std::invalid_argument("compactness_hypothesis_check: need at least two paths");

  const std::size_t steps = grid.steps();
  const std::vector<std::size_t> probes = {0, steps / 4, steps / 2, (3 * steps) / 4};

  CompactnessReport report;
  for (const KernelSeries& kernel : levels) {
    std::vector<double> terminal_sq(n_paths, 0.0);
    std::vector<double> sup_sq(n_paths, 0.0);
    parallel_for_index(n_paths, [&](std::size_t p) {
      const BrownianPath noise = sample_brownian(grid, x.size(), seed, p);
      const SolutionPath state = solve_euler(kernel, x, noise, grid);
      terminal_sq[p] = norm2_squared(state.at(steps));
      double sup = 0.0;
      for (std::size_t u : probes) {
        const std::vector<Mat> deriv = malliavin_derivative(kernel, state, u);
        for (const Mat& m : deriv) {
          const double f = m.frobenius_norm();
          sup = std::max(sup, f * f);
        }
      }
      sup_sq[p] = sup;
    });
    const MeanSE t2 = mean_se(terminal_sq);
    const MeanSE s2 = mean_se(sup_sq);
    auto root = [](const MeanSE& m) {
      const double r = std::sqrt(std::max(m.mean, 0.0));
      const double se = r > 0.0 ? m.std_error / (2.0 * r) : 0.0;
      return MeanSE{r, se};
    };
    const MeanSE t = root(t2);
    const MeanSE s = root(s2);

    HolderStatistic holder{0.0, 0.0, 0.0, true, {}, {}};
    if (steps >= 128) {
      const auto pairs = default_holder_pairs(grid);
      holder = holder_statistic(kernel, x, grid, n_paths, seed, pairs);
    }
    report.levels.push_back({t.mean, t.std_error, s.mean, s.std_error,
                             holder.slope, holder.degenerate});
  }

  const LevelStatistics& first = report.levels.front();
  const LevelStatistics& last = report.levels.back();
  auto no_growth = [](double a, double a_se, double b, double b_se) {
    return b <= a + 3.0 * std::sqrt(a_se * a_se + b_se * b_se);
  };
  report.state_bounded = no_growth(first.terminal_l2, first.terminal_l2_se,
                                   last.terminal_l2, last.terminal_l2_se);
  report.derivative_bounded =
      no_growth(first.sup_derivative_l2, first.sup_derivative_l2_se,
                last.sup_derivative_l2, last.sup_derivative_l2_se);
  return report;
}

}  // namespace svde
