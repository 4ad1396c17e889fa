#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "svde/algebra.hpp"
#include "svde/brownian.hpp"
#include "svde/grid.hpp"
#include "svde/integrals.hpp"
#include "svde/kernel.hpp"
#include "svde/parallel.hpp"
#include "svde/solver.hpp"
#include "svde/stats.hpp"

namespace svde {

using ScalarFn = std::function<double(std::span<const double>)>;

/// The drift functional C(t_i) of a state path W: the Volterra drift of the
/// kernel collapsed to a single-time functional via repeated integration,
///   C(t_i) = sum_m m! * I^m[g_m(., W(.))](t_i),   I^0 = identity.
/// Pairing C against Brownian increments gives the change of measure that
/// turns x + B into a weak solution of the kernel's equation.
struct DriftFunctional {
  TimeGrid grid;
  std::size_t dim;
  std::vector<double> values;  // (N+1) x dim

  std::span<const double> at(std::size_t i) const {
    return {values.data() + i * dim, dim};
  }
};

inline DriftFunctional drift_functional(const KernelSeries& kernel,
                                        const SolutionPath& state) {
  if (kernel.needs_factored_evaluation())
    throw std::invalid_argument(
        "drift_functional: the kernel's monomial coefficients cancel beyond "
        "double precision; reduce the series degree or the horizon");
  const std::size_t dim = state.dim;
  const std::size_t nodes = state.grid.node_count();
  DriftFunctional out{state.grid, dim, std::vector<double>(nodes * dim, 0.0)};

  std::vector<double> samples(nodes * dim, 0.0);
  std::vector<double> next(nodes * dim, 0.0);
  for (const KernelTerm& term : kernel.terms()) {
    for (std::size_t i = 0; i < nodes; ++i)
      term.field.evaluate_into(state.grid.node(i), state.at(i),
                               {samples.data() + i * dim, dim});
    // m! * I^m, with the factorial folded into the levels so that
    // intermediates stay of order t^level instead of overflowing for long
    // expansions.
    for (unsigned level = 1; level <= term.exponent; ++level) {
      detail::exclusive_prefix(samples, next, dim, state.grid.dt());
      for (double& v : next) v *= static_cast<double>(level);
      samples.swap(next);
    }
    for (std::size_t k = 0; k < samples.size(); ++k) out.values[k] += samples[k];
  }
  return out;
}

/// Log of the discrete Girsanov weight over [0, t_index]:
///   sum_{i<t_index} <C(i), B(i+1) - B(i)> - dt/2 |C(i)|^2.
/// Left-point evaluation keeps the integrand adapted, and the discrete weight
/// has mean exactly one under the Brownian law.
inline double log_weight(const DriftFunctional& c, const BrownianPath& noise,
                         std::size_t t_index) {
  if (!(c.grid == noise.grid) || c.dim != noise.dim)
    throw std::invalid_argument("log_weight: drift functional and noise disagree");
  if (t_index > c.grid.steps())
    throw std::invalid_argument("log_weight: t_index past end of grid");
  const double dt = c.grid.dt();
  double lw = 0.0;
  for (std::size_t i = 0; i < t_index; ++i) {
    const auto ci = c.at(i);
    const auto b0 = noise.at(i);
    const auto b1 = noise.at(i + 1);
    double inc = 0.0;
    for (std::size_t k = 0; k < c.dim; ++k) inc += ci[k] * (b1[k] - b0[k]);
    lw += inc - 0.5 * dt * norm2_squared(ci);
  }
  return lw;
}

struct WeightedSample {
  Vec terminal_state;
  double log_weight;
  std::uint64_t path_index;
};

/// One weighted sample per path index 0..n_paths-1, in that order. The state
/// is the drift-free path x + B; the weight reweights it into a weak solution.
inline std::vector<WeightedSample> weighted_samples(
    const KernelSeries& kernel, const Vec& x, std::size_t t_index,
    const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed) {
  if (x.empty()) throw std::invalid_argument("weighted_samples: empty initial state");
  if (n_paths < 2) throw std::invalid_argument("weighted_samples: need at least two paths");
  if (t_index > grid.steps())
    throw std::invalid_argument("weighted_samples: t_index past end of grid");
  std::vector<WeightedSample> out(n_paths);
  parallel_for_index(n_paths, [&](std::size_t p) {
    const BrownianPath noise = sample_brownian(grid, x.size(), seed, p);
    const SolutionPath state = drift_free_path(x, noise);
    const DriftFunctional c = drift_functional(kernel, state);
    const auto terminal = state.at(t_index);
    out[p] = {Vec(terminal.begin(), terminal.end()), log_weight(c, noise, t_index),
              static_cast<std::uint64_t>(p)};
  });
  return out;
}

struct EstimatorResult {
  double estimate;
  double std_error;
  std::size_t n_paths;
};

/// Girsanov-weighted weak estimator of E[phi(X(t_index))]: averages
/// phi(x + B) * exp(log weight) over independent paths. No drift is ever
/// simulated; the kernel enters only through the weight.
inline EstimatorResult weak_estimator(const KernelSeries& kernel, const Vec& x,
                                      const ScalarFn& phi, std::size_t t_index,
                                      const TimeGrid& grid, std::size_t n_paths,
                                      std::uint64_t seed) {
  if (x.empty()) throw std::invalid_argument("weak_estimator: empty initial state");
  if (!phi) throw std::invalid_argument("weak_estimator: missing test function");
  if (n_paths < 2) throw std::invalid_argument("weak_estimator: need at least two paths");
  if (t_index > grid.steps())
    throw std::invalid_argument("weak_estimator: t_index past end of grid");
  std::vector<double> slots(n_paths, 0.0);
  parallel_for_index(n_paths, [&](std::size_t p) {
    const BrownianPath noise = sample_brownian(grid, x.size(), seed, p);
    const SolutionPath state = drift_free_path(x, noise);
    const DriftFunctional c = drift_functional(kernel, state);
    slots[p] = phi(state.at(t_index)) * std::exp(log_weight(c, noise, t_index));
  });
  const MeanSE ms = mean_se(slots);
  return {ms.mean, ms.std_error, n_paths};
}

/// Strong-solution Monte Carlo estimator of E[phi(X(t_index))] by the Euler
/// scheme, sharing the path substream layout of the weak estimator so the two
/// can be compared under common random numbers.
inline EstimatorResult euler_estimator(const KernelSeries& kernel, const Vec& x,
                                       const ScalarFn& phi, std::size_t t_index,
                                       const TimeGrid& grid, std::size_t n_paths,
                                       std::uint64_t seed) {
  if (x.empty()) throw std::invalid_argument("euler_estimator: empty initial state");
  if (!phi) throw std::invalid_argument("euler_estimator: missing test function");
  if (n_paths < 2) throw std::invalid_argument("euler_estimator: need at least two paths");
  if (t_index > grid.steps())
    throw std::invalid_argument("euler_estimator: t_index past end of grid");
  std::vector<double> slots(n_paths, 0.0);
  parallel_for_index(n_paths, [&](std::size_t p) {
    const BrownianPath noise = sample_brownian(grid, x.size(), seed, p);
    const SolutionPath state = solve_euler(kernel, x, noise, grid);
    slots[p] = phi(state.at(t_index));
  });
  const MeanSE ms = mean_se(slots);
  return {ms.mean, ms.std_error, n_paths};
}

struct WeightDiagnostics {
  double mean_weight;
  double mean_weight_se;
  double weight_variance;
  double effective_sample_size;
  std::size_t n_samples;
  bool low_ess;  // effective sample size below a tenth of the sample count
};

inline WeightDiagnostics weight_diagnostics(std::span<const WeightedSample> samples) {
  if (samples.size() < 2)
    throw std::invalid_argument("weight_diagnostics: need at least two samples");
  std::vector<double> weights(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    weights[i] = std::exp(samples[i].log_weight);
  const MeanSE ms = mean_se(weights);
  const double n = static_cast<double>(samples.size());
  const double variance = ms.std_error * ms.std_error * n;
  const double ess = effective_sample_size(weights);
  return {ms.mean, ms.std_error, variance, ess, samples.size(), ess < 0.1 * n};
}

}  // namespace svde
