#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "svde/brownian.hpp"
#include "svde/girsanov.hpp"
#include "svde/grid.hpp"
#include "svde/integrals.hpp"
#include "svde/kernel.hpp"
#include "svde/mollify.hpp"
#include "svde/presets.hpp"
#include "svde/sensitivity.hpp"
#include "svde/solver.hpp"
#include "svde/stats.hpp"

namespace svde {

/// Raised for malformed or inconsistent experiment configuration; the CLI
/// maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string command;
  KernelSpec kernel;
  double horizon = 1.0;
  std::size_t steps = 1000;
  std::size_t dim = 1;
  Vec x;  // empty = origin, single value = broadcast
  std::uint64_t seed = 1;
  std::size_t n_paths = 10000;
  std::size_t t_index = static_cast<std::size_t>(-1);  // resolved to N
  bool noise = true;
  std::size_t path_index = 0;
  std::vector<std::string> phi = {"id"};
  std::vector<unsigned> levels = {4, 16, 64};
  unsigned cauchy_k = 2;
  std::string cauchy_f = "linear";
  unsigned refine_levels = 3;
  double fd_step = 1e-4;
  std::size_t fd_paths = 100;
  std::string out;
};

struct OutputRow {
  std::string metric;
  double value;
  double std_error;
};

struct RunOutcome {
  std::vector<OutputRow> rows;
  bool checks_passed = true;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::string item;
  std::stringstream stream(s);
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a non-negative integer, got '" +
                      value + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw ConfigError("config: key '" + key + "' expects on/off, got '" + value + "'");
}

/// Locale-independent shortest-17-digit rendering, so CSV output is
/// byte-stable across environments.
inline std::string format_g17(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Parse the flat key=value experiment format: one pair per line, '#' starts
/// a comment, lists are comma separated. Unknown keys are rejected.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::map<std::string, std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key=value, got '" + line + "'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (!seen.emplace(key, value).second)
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" +
                        key + "'");

    if (key == "command") {
      cfg.command = value;
    } else if (key == "kernel") {
      cfg.kernel.preset = value;
    } else if (key == "c") {
      cfg.kernel.c = detail::parse_double(key, value);
    } else if (key == "lambda") {
      cfg.kernel.lambda = detail::parse_double(key, value);
    } else if (key == "alpha") {
      cfg.kernel.alpha = detail::parse_double(key, value);
    } else if (key == "k_max") {
      cfg.kernel.k_max = static_cast<unsigned>(detail::parse_u64(key, value));
    } else if (key == "n_max") {
      cfg.kernel.n_max = static_cast<unsigned>(detail::parse_u64(key, value));
    } else if (key == "base_field") {
      cfg.kernel.base_field = value;
    } else if (key == "exponents") {
      for (const std::string& item : detail::split_list(value))
        cfg.kernel.exponents.push_back(
            static_cast<unsigned>(detail::parse_u64(key, item)));
    } else if (key == "fields") {
      cfg.kernel.field_names = detail::split_list(value);
    } else if (key == "mollify_level") {
      cfg.kernel.mollify_level = static_cast<unsigned>(detail::parse_u64(key, value));
    } else if (key == "quad_points") {
      cfg.kernel.quad_points = detail::parse_u64(key, value);
    } else if (key == "T") {
      cfg.horizon = detail::parse_double(key, value);
    } else if (key == "N") {
      cfg.steps = detail::parse_u64(key, value);
    } else if (key == "d") {
      cfg.dim = detail::parse_u64(key, value);
    } else if (key == "x") {
      for (const std::string& item : detail::split_list(value))
        cfg.x.push_back(detail::parse_double(key, item));
    } else if (key == "seed") {
      cfg.seed = detail::parse_u64(key, value);
    } else if (key == "n_paths") {
      cfg.n_paths = detail::parse_u64(key, value);
    } else if (key == "t_index") {
      cfg.t_index = detail::parse_u64(key, value);
    } else if (key == "noise") {
      cfg.noise = detail::parse_bool(key, value);
    } else if (key == "path_index") {
      cfg.path_index = detail::parse_u64(key, value);
    } else if (key == "phi") {
      cfg.phi = detail::split_list(value);
    } else if (key == "levels") {
      cfg.levels.clear();
      for (const std::string& item : detail::split_list(value))
        cfg.levels.push_back(static_cast<unsigned>(detail::parse_u64(key, item)));
    } else if (key == "k") {
      cfg.cauchy_k = static_cast<unsigned>(detail::parse_u64(key, value));
    } else if (key == "f") {
      cfg.cauchy_f = value;
    } else if (key == "refine_levels") {
      cfg.refine_levels = static_cast<unsigned>(detail::parse_u64(key, value));
    } else if (key == "fd_step") {
      cfg.fd_step = detail::parse_double(key, value);
    } else if (key == "fd_paths") {
      cfg.fd_paths = detail::parse_u64(key, value);
    } else if (key == "out") {
      cfg.out = value;
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                        key + "'");
    }
  }
  return cfg;
}

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> commands = {
      "solve",        "girsanov-check", "oracle-compare", "derivative-check",
      "cauchy-check", "mollify-study",  "holder-study"};
  return commands;
}

/// Check cross-field consistency and resolve derived defaults in place.
/// Throws ConfigError on anything a run could not honor.
inline void validate_config(ExperimentConfig& cfg) {
  if (std::find(known_commands().begin(), known_commands().end(), cfg.command) ==
      known_commands().end())
    throw ConfigError("config: unknown command '" + cfg.command + "'");
  if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon))
    throw ConfigError("config: T must be finite and positive");
  if (cfg.steps < 1) throw ConfigError("config: N must be at least 1");
  if (cfg.dim < 1) throw ConfigError("config: d must be at least 1");
  if (cfg.x.empty()) cfg.x.assign(cfg.dim, 0.0);
  if (cfg.x.size() == 1 && cfg.dim > 1) cfg.x.assign(cfg.dim, cfg.x[0]);
  if (cfg.x.size() != cfg.dim)
    throw ConfigError("config: x must have one entry or d entries");
  if (cfg.t_index == static_cast<std::size_t>(-1)) cfg.t_index = cfg.steps;
  if (cfg.t_index > cfg.steps) throw ConfigError("config: t_index must not exceed N");

  const bool stochastic = cfg.command == "girsanov-check" ||
                          cfg.command == "oracle-compare" ||
                          cfg.command == "mollify-study" ||
                          cfg.command == "holder-study";
  if (stochastic && cfg.n_paths < 2)
    throw ConfigError("config: n_paths must be at least 2");

  if (cfg.command != "cauchy-check") {
    try {
      const KernelSeries kernel = build_kernel(cfg.kernel, cfg.horizon, cfg.dim);
      const bool needs_weights = cfg.command == "girsanov-check" ||
                                 cfg.command == "oracle-compare" ||
                                 cfg.command == "mollify-study";
      if (needs_weights && kernel.needs_factored_evaluation())
        throw ConfigError(
            "config: reweighting commands need the kernel's monomial form, which "
            "cancels beyond double precision here; reduce n_max or T");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: kernel rejected: ") + e.what());
    }
  } else {
    if (cfg.cauchy_k > 8) throw ConfigError("config: k must be at most 8");
    if (cfg.cauchy_f != "one" && cfg.cauchy_f != "linear" && cfg.cauchy_f != "quadratic")
      throw ConfigError("config: f must be one|linear|quadratic");
    if (cfg.refine_levels < 1 || cfg.refine_levels > 6)
      throw ConfigError("config: refine_levels must be between 1 and 6");
  }

  for (const std::string& name : cfg.phi) {
    try {
      (void)make_phi(name);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (cfg.phi.empty()) throw ConfigError("config: phi list must not be empty");

  if (cfg.command == "mollify-study") {
    if (cfg.levels.empty()) throw ConfigError("config: levels must not be empty");
    for (std::size_t i = 1; i < cfg.levels.size(); ++i)
      if (cfg.levels[i] <= cfg.levels[i - 1])
        throw ConfigError("config: levels must be strictly increasing");
    if (cfg.kernel.mollify_level != 0)
      throw ConfigError("config: mollify-study mollifies internally; leave mollify_level unset");
  }
  if (cfg.command == "holder-study" && cfg.steps < 128)
    throw ConfigError("config: holder-study needs N of at least 128");
  if (cfg.command == "derivative-check" && cfg.fd_paths < 1)
    throw ConfigError("config: fd_paths must be at least 1");
  if (cfg.command == "derivative-check" &&
      (!(cfg.fd_step > 0.0) || !std::isfinite(cfg.fd_step)))
    throw ConfigError("config: fd_step must be finite and positive");
}

namespace detail {

inline RunOutcome run_solve(const ExperimentConfig& cfg) {
  const TimeGrid grid(cfg.horizon, cfg.steps);
  const KernelSeries kernel = build_kernel(cfg.kernel, cfg.horizon, cfg.dim);
  const BrownianPath noise = cfg.noise
                                 ? sample_brownian(grid, cfg.dim, cfg.seed, cfg.path_index)
                                 : zero_brownian(grid, cfg.dim);
  const SolutionPath path = solve_euler(kernel, cfg.x, noise, grid);
  RunOutcome out;
  const auto terminal = path.at(cfg.t_index);
  for (std::size_t c = 0; c < cfg.dim; ++c)
    out.rows.push_back({"X_final_" + std::to_string(c), terminal[c], 0.0});
  out.rows.push_back({"tail_bound", kernel.tail_bound(), 0.0});
  return out;
}

inline RunOutcome run_girsanov_check(const ExperimentConfig& cfg) {
  const TimeGrid grid(cfg.horizon, cfg.steps);
  const KernelSeries kernel = build_kernel(cfg.kernel, cfg.horizon, cfg.dim);
  const auto samples =
      weighted_samples(kernel, cfg.x, cfg.t_index, grid, cfg.n_paths, cfg.seed);
  const WeightDiagnostics diag = weight_diagnostics(samples);
  RunOutcome out;
  out.rows.push_back({"mean_weight", diag.mean_weight, diag.mean_weight_se});
  out.rows.push_back({"weight_variance", diag.weight_variance, 0.0});
  out.rows.push_back({"ess", diag.effective_sample_size, 0.0});
  out.rows.push_back(
      {"ess_fraction",
       diag.effective_sample_size / static_cast<double>(diag.n_samples), 0.0});
  out.checks_passed =
      std::abs(diag.mean_weight - 1.0) <= 3.0 * diag.mean_weight_se;
  if (diag.low_ess)
    out.warnings.push_back(
        "effective sample size below 10% of n_paths; weights are degenerate");
  return out;
}

inline RunOutcome run_oracle_compare(const ExperimentConfig& cfg) {
  const TimeGrid grid(cfg.horizon, cfg.steps);
  const KernelSeries kernel = build_kernel(cfg.kernel, cfg.horizon, cfg.dim);
  RunOutcome out;
  for (const std::string& name : cfg.phi) {
    const ScalarFn phi = make_phi(name);
    const EstimatorResult euler =
        euler_estimator(kernel, cfg.x, phi, cfg.t_index, grid, cfg.n_paths, cfg.seed);
    const EstimatorResult girsanov =
        weak_estimator(kernel, cfg.x, phi, cfg.t_index, grid, cfg.n_paths, cfg.seed);
    const double gap = std::abs(euler.estimate - girsanov.estimate);
    const double combined = std::sqrt(euler.std_error * euler.std_error +
                                      girsanov.std_error * girsanov.std_error);
    out.rows.push_back({"euler_" + name, euler.estimate, euler.std_error});
    out.rows.push_back({"girsanov_" + name, girsanov.estimate, girsanov.std_error});
    out.rows.push_back({"gap_" + name, gap, combined});
    if (gap > 3.0 * combined) out.checks_passed = false;
  }
  return out;
}

inline RunOutcome run_derivative_check(const ExperimentConfig& cfg) {
  const TimeGrid grid(cfg.horizon, cfg.steps);
  const KernelSeries kernel = build_kernel(cfg.kernel, cfg.horizon, cfg.dim);
  if (!kernel.has_gradients())
    throw ConfigError("config: derivative-check requires a kernel with gradients");
  const double h = cfg.fd_step;

  std::vector<double> rel(cfg.fd_paths, 0.0);
  parallel_for_index(cfg.fd_paths, [&](std::size_t p) {
    const BrownianPath noise = sample_brownian(grid, cfg.dim, cfg.seed, p);
    const SolutionPath path = solve_euler(kernel, cfg.x, noise, grid);
    const Mat jac = flow_derivative(kernel, path).back();
    Mat fd(cfg.dim);
    for (std::size_t c = 0; c < cfg.dim; ++c) {
      Vec xp = cfg.x, xm = cfg.x;
      xp[c] += h;
      xm[c] -= h;
      const SolutionPath up = solve_euler(kernel, xp, noise, grid);
      const SolutionPath dn = solve_euler(kernel, xm, noise, grid);
      const auto upt = up.at(grid.steps());
      const auto dnt = dn.at(grid.steps());
      for (std::size_t r = 0; r < cfg.dim; ++r)
        fd(r, c) = (upt[r] - dnt[r]) / (2.0 * h);
    }
    const double denom = std::max(jac.frobenius_norm(), 1e-300);
    rel[p] = (fd - jac).frobenius_norm() / denom;
  });

  std::vector<double> sorted = rel;
  std::sort(sorted.begin(), sorted.end());
  const double tol = 1e-3;
  std::size_t within = 0;
  for (double r : rel)
    if (r <= tol) ++within;
  const double fraction = static_cast<double>(within) / static_cast<double>(rel.size());

  RunOutcome out;
  out.rows.push_back({"fd_match_fraction", fraction, 0.0});
  out.rows.push_back({"median_rel_err", sorted[sorted.size() / 2], 0.0});
  out.rows.push_back({"max_rel_err", sorted.back(), 0.0});
  out.checks_passed = fraction >= 0.95;
  return out;
}

inline RunOutcome run_cauchy_check(const ExperimentConfig& cfg) {
  RunOutcome out;
  std::vector<double> log_dt, log_res;
  std::vector<double> residuals;
  for (unsigned level = 0; level < cfg.refine_levels; ++level) {
    const std::size_t n = cfg.steps << level;
    const TimeGrid grid(cfg.horizon, n);
    std::vector<double> f(grid.node_count());
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double s = grid.node(i);
      f[i] = cfg.cauchy_f == "one" ? 1.0 : (cfg.cauchy_f == "linear" ? s : s * s);
    }
    const double res = cauchy_check(f, cfg.cauchy_k, grid);
    residuals.push_back(res);
    out.rows.push_back({"residual_N" + std::to_string(n), res, 0.0});
    if (res > 0.0) {
      log_dt.push_back(std::log(grid.dt()));
      log_res.push_back(std::log(res));
    }
  }
  double order = 0.0;
  if (log_dt.size() >= 2) order = least_squares_slope(log_dt, log_res);
  out.rows.push_back({"order", order, 0.0});

  if (cfg.cauchy_k <= 1) {
    for (double r : residuals)
      if (r > 1e-10) out.checks_passed = false;
  } else {
    for (std::size_t i = 1; i < residuals.size(); ++i)
      if (residuals[i] > residuals[i - 1]) out.checks_passed = false;
    if (residuals.size() >= 2 && (order < 0.7 || order > 1.3))
      out.checks_passed = false;
  }
  return out;
}

inline RunOutcome run_mollify_study(const ExperimentConfig& cfg) {
  const TimeGrid grid(cfg.horizon, cfg.steps);
  const KernelSeries reference = build_kernel(cfg.kernel, cfg.horizon, cfg.dim);
  std::vector<KernelSeries> level_kernels;
  level_kernels.reserve(cfg.levels.size());
  for (unsigned n : cfg.levels)
    level_kernels.push_back(
        mollify_kernel(reference, n, cfg.kernel.quad_points, cfg.dim));
  const ScalarFn phi = make_phi(cfg.phi.front());
  const WeakConvergenceStudy study =
      weak_convergence_study(level_kernels, cfg.levels, reference, cfg.x, phi,
                             cfg.t_index, grid, cfg.n_paths, cfg.seed);

  RunOutcome out;
  for (std::size_t i = 0; i < study.levels.size(); ++i)
    out.rows.push_back({"euler_n" + std::to_string(study.levels[i]),
                        study.estimates[i].estimate, study.estimates[i].std_error});
  out.rows.push_back({"girsanov_ref", study.reference.estimate,
                      study.reference.std_error});

  const EstimatorResult& first = study.estimates.front();
  const EstimatorResult& last = study.estimates.back();
  const double gap_first = std::abs(first.estimate - study.reference.estimate);
  const double gap_last = std::abs(last.estimate - study.reference.estimate);
  const double se_first = std::sqrt(first.std_error * first.std_error +
                                    study.reference.std_error * study.reference.std_error);
  const double se_last = std::sqrt(last.std_error * last.std_error +
                                   study.reference.std_error * study.reference.std_error);
  out.rows.push_back({"gap_first", gap_first, se_first});
  out.rows.push_back({"gap_final", gap_last, se_last});
  const bool final_ok = gap_last <= 3.0 * se_last;
  const bool trend_ok = gap_last <= gap_first + 3.0 * std::sqrt(se_first * se_first +
                                                                se_last * se_last);
  out.rows.push_back({"final_within_3se", final_ok ? 1.0 : 0.0, 0.0});
  out.rows.push_back({"trend_ok", trend_ok ? 1.0 : 0.0, 0.0});
  out.checks_passed = final_ok && trend_ok;
  return out;
}

inline RunOutcome run_holder_study(const ExperimentConfig& cfg) {
  const TimeGrid grid(cfg.horizon, cfg.steps);
  RunOutcome out;
  const auto pairs = default_holder_pairs(grid);

  if (cfg.levels.empty()) {
    const KernelSeries kernel = build_kernel(cfg.kernel, cfg.horizon, cfg.dim);
    if (!kernel.has_gradients())
      throw ConfigError(
          "config: holder-study without levels requires a kernel with gradients "
          "(set mollify_level or levels)");
    const HolderStatistic stat =
        holder_statistic(kernel, cfg.x, grid, cfg.n_paths, cfg.seed, pairs);
    for (std::size_t q = 0; q < stat.separations.size(); ++q) {
      out.rows.push_back({"sep_" + std::to_string(q), stat.separations[q], 0.0});
      out.rows.push_back({"l2_diff_" + std::to_string(q), stat.l2_differences[q], 0.0});
    }
    out.rows.push_back({"slope", stat.slope, 0.0});
    out.rows.push_back({"ci_lower", stat.ci_lower, 0.0});
    out.rows.push_back({"ci_upper", stat.ci_upper, 0.0});
    out.rows.push_back({"degenerate", stat.degenerate ? 1.0 : 0.0, 0.0});
    out.checks_passed = !stat.degenerate && stat.ci_lower > 0.0;
    if (stat.degenerate)
      out.warnings.push_back(
          "derivative differences vanish identically; slope is undefined");
    return out;
  }

  // With approximation levels: check the tightness hypotheses across the
  // mollified family instead of a single kernel.
  const KernelSeries base = build_kernel(cfg.kernel, cfg.horizon, cfg.dim);
  std::vector<KernelSeries> level_kernels;
  for (unsigned n : cfg.levels)
    level_kernels.push_back(mollify_kernel(base, n, cfg.kernel.quad_points, cfg.dim));
  const CompactnessReport report = compactness_hypothesis_check(
      level_kernels, cfg.x, grid, cfg.n_paths, cfg.seed);
  for (std::size_t i = 0; i < report.levels.size(); ++i) {
    const LevelStatistics& lv = report.levels[i];
    const std::string tag = "_n" + std::to_string(cfg.levels[i]);
    out.rows.push_back({"terminal_l2" + tag, lv.terminal_l2, lv.terminal_l2_se});
    out.rows.push_back(
        {"sup_deriv_l2" + tag, lv.sup_derivative_l2, lv.sup_derivative_l2_se});
    out.rows.push_back({"holder_slope" + tag, lv.holder_slope, 0.0});
  }
  out.rows.push_back({"state_bounded", report.state_bounded ? 1.0 : 0.0, 0.0});
  out.rows.push_back(
      {"derivative_bounded", report.derivative_bounded ? 1.0 : 0.0, 0.0});
  out.checks_passed = report.state_bounded && report.derivative_bounded;
  return out;
}

}  // namespace detail

/// Execute a validated configuration. Statistical checks set
/// `checks_passed`; the CLI turns a false into exit code 3 under --assert.
inline RunOutcome run_experiment(const ExperimentConfig& cfg) {
  if (cfg.command == "solve") return detail::run_solve(cfg);
  if (cfg.command == "girsanov-check") return detail::run_girsanov_check(cfg);
  if (cfg.command == "oracle-compare") return detail::run_oracle_compare(cfg);
  if (cfg.command == "derivative-check") return detail::run_derivative_check(cfg);
  if (cfg.command == "cauchy-check") return detail::run_cauchy_check(cfg);
  if (cfg.command == "mollify-study") return detail::run_mollify_study(cfg);
  if (cfg.command == "holder-study") return detail::run_holder_study(cfg);
  throw ConfigError("run_experiment: unknown command '" + cfg.command + "'");
}

/// Render rows as CSV with the fixed column set. Newlines are '\n', decimals
/// use '.', and doubles carry 17 significant digits, so identical
/// (config, seed) runs are byte-identical regardless of threading.
inline std::string render_csv(const ExperimentConfig& cfg,
                              std::span<const OutputRow> rows) {
  std::string out = "command,kernel,T,N,d,n_paths,seed,metric,value,std_error\n";
  const std::string prefix = cfg.command + "," + cfg.kernel.preset + "," +
                             detail::format_g17(cfg.horizon) + "," +
                             std::to_string(cfg.steps) + "," + std::to_string(cfg.dim) +
                             "," + std::to_string(cfg.n_paths) + "," +
                             std::to_string(cfg.seed) + ",";
  for (const OutputRow& row : rows) {
    out += prefix + row.metric + "," + detail::format_g17(row.value) + "," +
           detail::format_g17(row.std_error) + "\n";
  }
  return out;
}

}  // namespace svde
