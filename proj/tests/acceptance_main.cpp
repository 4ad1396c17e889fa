// End-to-end acceptance suite. Each check prints exactly one PASS/FAIL line;
// the process exit code is the number of failures. The CLI binary under test
// is supplied with --svde-bin so the determinism check can spawn it.

#include <quadmath.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "svde/svde.hpp"

using namespace svde;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s  %2d. %s%s%s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

KernelSeries single_term(unsigned exponent, const std::string& field, double horizon,
                         double c = 1.0, double lambda = 1.0) {
  std::vector<KernelTerm> terms;
  terms.push_back({exponent, make_field(field, c, lambda)});
  return KernelSeries(std::move(terms), horizon);
}

// 1. Repeated-integration residual for f(s) = s, k = 2: small at N = 1000 and
// refining at first order across doublings.
void criterion_cauchy() {
  std::vector<double> residuals, log_dt, log_res;
  for (std::size_t n : {1000u, 2000u, 4000u}) {
    const TimeGrid grid = make_grid(1.0, n);
    std::vector<double> f(grid.node_count());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = grid.node(i);
    const double res = cauchy_check(f, 2, grid);
    residuals.push_back(res);
    log_dt.push_back(std::log(grid.dt()));
    log_res.push_back(std::log(res));
  }
  const double order = least_squares_slope(log_dt, log_res);
  const bool pass = residuals[0] <= 1e-3 && order >= 0.7 && order <= 1.3;
  report(1, "iterated-integral residual, f(s)=s, k=2", pass,
         "residual(N=1000)=" + fmt(residuals[0]) + ", order=" + fmt(order));
}

// 2. Deterministic gap-linear kernel hits cosh(1) at first order.
void criterion_cosh() {
  const double target = std::cosh(1.0);
  const TimeGrid g1 = make_grid(1.0, 10000);
  const TimeGrid g2 = make_grid(1.0, 20000);
  const KernelSeries k1 = single_term(1, "linear_x", 1.0);
  const double e1 =
      std::abs(solve_deterministic(k1, {1.0}, g1).at(g1.steps())[0] - target);
  const double e2 =
      std::abs(solve_deterministic(k1, {1.0}, g2).at(g2.steps())[0] - target);
  const double ratio = e1 / e2;
  const bool pass = e1 <= 5e-4 && ratio >= 1.6 && ratio <= 2.4;
  report(2, "deterministic cosh oracle", pass,
         "err(N=1e4)=" + fmt(e1) + ", refinement ratio=" + fmt(ratio));
}

// 3. Memoryless linear drift reproduces the exponential.
void criterion_exp() {
  const TimeGrid g = make_grid(1.0, 10000);
  const double v =
      solve_deterministic(single_term(0, "linear_x", 1.0), {1.0}, g).at(10000)[0];
  const double err = std::abs(v - std::exp(1.0));
  report(3, "deterministic exponential oracle", err <= 1e-3, "err=" + fmt(err));
}

// 4. The discrete change-of-measure weight is a mean-one martingale with
// healthy effective sample size for a bounded smooth drift.
void criterion_weights() {
  const TimeGrid g = make_grid(0.5, 1000);
  const KernelSeries k = single_term(0, "cos_x", 0.5);
  const std::size_t n = 100000;
  const auto samples = weighted_samples(k, {0.0}, g.steps(), g, n, 2025);
  const WeightDiagnostics diag = weight_diagnostics(samples);
  const bool mean_ok = std::abs(diag.mean_weight - 1.0) <= 3.0 * diag.mean_weight_se;
  const bool ess_ok = diag.effective_sample_size >= 0.5 * static_cast<double>(n);
  report(4, "girsanov weight martingale and ESS", mean_ok && ess_ok,
         "mean=" + fmt(diag.mean_weight) + " (se " + fmt(diag.mean_weight_se) +
             "), ess/n=" + fmt(diag.effective_sample_size / static_cast<double>(n)));
}

// 5. Weak (girsanov) and strong (euler) estimators agree on three test
// functions within three combined standard errors.
void criterion_estimators() {
  const TimeGrid g = make_grid(0.5, 2000);
  const KernelSeries k = single_term(0, "cos_x", 0.5);
  const std::size_t n = 100000;
  bool pass = true;
  std::string detail;
  for (const char* name : {"id", "square", "sin"}) {
    const ScalarFn phi = make_phi(name);
    const EstimatorResult weak = weak_estimator(k, {0.0}, phi, g.steps(), g, n, 11);
    const EstimatorResult strong = euler_estimator(k, {0.0}, phi, g.steps(), g, n, 11);
    const double gap = std::abs(weak.estimate - strong.estimate);
    const double se = std::sqrt(weak.std_error * weak.std_error +
                                strong.std_error * strong.std_error);
    if (gap > 3.0 * se) pass = false;
    if (!detail.empty()) detail += ", ";
    detail += std::string(name) + ": gap=" + fmt(gap) + " vs 3se=" + fmt(3.0 * se);
  }
  report(5, "weak vs strong estimator agreement", pass, detail);
}

// 6. The single-time drift functional reconstructs the two-time Volterra
// drift after one more integration, uniformly over sampled paths.
void criterion_reconstruction() {
  const TimeGrid g = make_grid(1.0, 1000);
  const rng::GaussianPair z = rng::gaussian_pair(777, 0, 0);
  std::vector<KernelTerm> terms;
  terms.push_back({1, scale_field(std::tanh(z.z0), make_field("cos_x"))});
  terms.push_back({2, scale_field(0.5 * std::tanh(z.z1), make_field("linear_x"))});
  const KernelSeries k(std::move(terms), 1.0);
  const double budget = 5.0 * g.dt() * k.tail_bound();

  double worst = 0.0;
  Vec kv(1), scratch(1);
  for (std::uint64_t p = 0; p < 20; ++p) {
    const BrownianPath b = sample_brownian(g, 1, 31337, p);
    const SolutionPath w = drift_free_path({0.1}, b);
    const DriftFunctional c = drift_functional(k, w);
    const auto c_integral = iterated_integral(c.values, 1, g);
    for (std::size_t i : {250u, 500u, 750u, 1000u}) {
      double direct = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        k.evaluate_into(g.node(i), g.node(j), w.at(j), kv, scratch);
        direct += kv[0] * g.dt();
      }
      worst = std::max(worst, std::abs(direct - c_integral[i]));
    }
  }
  report(6, "drift functional reconstructs the volterra drift", worst <= budget,
         "max residual=" + fmt(worst) + " vs budget=" + fmt(budget));
}

// 7. The flow derivative is the exact jacobian of the discrete map: central
// differences match to 0.1% on at least 95% of paths.
void criterion_flow_fd() {
  const TimeGrid g = make_grid(0.5, 10000);
  const KernelSeries k = single_term(0, "cos_x", 0.5);
  const double h = 1e-4;
  const std::size_t n_paths = 100;
  std::vector<double> rel(n_paths, 0.0);
  parallel_for_index(n_paths, [&](std::size_t p) {
    const BrownianPath b = sample_brownian(g, 1, 4242, p);
    const SolutionPath x = solve_euler(k, {0.0}, b, g);
    const double jac = flow_derivative(k, x).back()(0, 0);
    const SolutionPath up = solve_euler(k, {h}, b, g);
    const SolutionPath dn = solve_euler(k, {-h}, b, g);
    const double fd = (up.at(g.steps())[0] - dn.at(g.steps())[0]) / (2.0 * h);
    rel[p] = std::abs(fd - jac) / std::max(std::abs(jac), 1e-300);
  });
  std::size_t ok = 0;
  double worst = 0.0;
  for (double r : rel) {
    if (r <= 1e-3) ++ok;
    worst = std::max(worst, r);
  }
  const double fraction = static_cast<double>(ok) / static_cast<double>(n_paths);
  report(7, "flow derivative vs common-noise finite differences", fraction >= 0.95,
         "fraction=" + fmt(fraction) + ", worst rel err=" + fmt(worst));
}

// 8. Malliavin derivative of the memoryless linear kernel: the exact
// exponential, uniformly over differentiation times, within 10 dt.
void criterion_malliavin_exp() {
  const double lambda = 1.0;
  const TimeGrid g = make_grid(1.0, 4000);
  const KernelSeries k = single_term(0, "linear_x", 1.0, 1.0, lambda);
  const BrownianPath b = sample_brownian(g, 1, 555, 0);
  const SolutionPath x = solve_euler(k, {1.0}, b, g);
  double worst = 0.0;
  for (std::size_t u = 0; u <= g.steps(); u += 40) {
    const auto d = malliavin_derivative(k, x, u);
    for (std::size_t j = 0; j < d.size(); ++j) {
      const double exact = std::exp(lambda * (g.node(u + j) - g.node(u)));
      worst = std::max(worst, std::abs(d[j](0, 0) - exact));
    }
  }
  const bool pass = worst <= 10.0 * g.dt();
  report(8, "malliavin derivative exponential oracle", pass,
         "max err=" + fmt(worst) + " vs 10dt=" + fmt(10.0 * g.dt()));
}

// 9. Hoelder statistic of u -> D_u X(T) for the smooth bounded drift: the
// log-log slope is positive at the 95% bootstrap level.
void criterion_holder() {
  const TimeGrid g = make_grid(1.0, 1024);
  const KernelSeries k = single_term(0, "cos_x", 1.0);
  const HolderStatistic stat =
      holder_statistic(k, {0.0}, g, 10000, 909, default_holder_pairs(g));
  const bool pass = !stat.degenerate && stat.ci_lower > 0.0;
  report(9, "hoelder slope of the malliavin derivative", pass,
         "slope=" + fmt(stat.slope) + ", 95% ci=[" + fmt(stat.ci_lower) + "," +
             fmt(stat.ci_upper) + "]");
}

// 10. Mollified sign-drift approximations converge weakly to the girsanov
// reference of the discontinuous limit.
void criterion_mollify() {
  const TimeGrid g = make_grid(0.5, 500);
  const KernelSeries rough = single_term(0, "sign_x", 0.5);
  const std::vector<unsigned> ids = {4, 16, 64};
  std::vector<KernelSeries> levels;
  for (unsigned n : ids) levels.push_back(mollify_kernel(rough, n, 16, 1));
  const WeakConvergenceStudy study =
      weak_convergence_study(levels, ids, rough, {0.0}, make_phi("bounded_id"),
                             g.steps(), g, 100000, 33);
  const EstimatorResult& first = study.estimates.front();
  const EstimatorResult& last = study.estimates.back();
  const double gap_first = std::abs(first.estimate - study.reference.estimate);
  const double gap_last = std::abs(last.estimate - study.reference.estimate);
  const double se_last = std::sqrt(last.std_error * last.std_error +
                                   study.reference.std_error * study.reference.std_error);
  const double se_all = std::sqrt(first.std_error * first.std_error +
                                  last.std_error * last.std_error +
                                  study.reference.std_error * study.reference.std_error);
  const bool within = gap_last <= 3.0 * se_last;
  const bool trend = gap_last <= gap_first + 3.0 * se_all;
  report(10, "weak convergence of mollified sign drifts", within && trend,
         "gap(n=64)=" + fmt(gap_last) + " vs 3se=" + fmt(3.0 * se_last) +
             ", gap(n=4)=" + fmt(gap_first));
}

// 11. The truncated sine kernel matches sine to the first dropped Taylor
// term, verified in 128-bit arithmetic because the bound sits far below
// double resolution.
void criterion_sin_kernel() {
  const auto coeff = sin_gap_coefficients<__float128>(8);
  __float128 worst = 0;
  for (int i = 0; i <= 1000; ++i) {
    const __float128 u = static_cast<__float128>(i) / 1000;
    const __float128 u2 = u * u;
    __float128 acc = coeff.back();
    for (std::size_t k = coeff.size() - 1; k-- > 0;) acc = acc * u2 + coeff[k];
    acc *= u;
    const __float128 diff = fabsq(acc - sinq(u));
    if (diff > worst) worst = diff;
  }
  const __float128 bound =
      static_cast<__float128>(1) / 121645100408832000ULL;  // 1/19!
  char buf[64];
  quadmath_snprintf(buf, sizeof(buf), "%.3Qe", worst);
  report(11, "sine kernel truncation error below 1/19!", worst <= bound,
         std::string("sup err=") + buf);
}

// 12. The long fractional expansion evaluates the power gap to one percent
// across [0.2, 1.8] despite astronomically large monomial coefficients.
void criterion_fractional() {
  const double alpha = -0.4;
  const KernelSeries k = fractional_kernel(alpha, make_field("constant", 1.0), 200, 1.9);
  double worst = 0.0;
  for (int i = 0; i <= 160; ++i) {
    const double u = 0.2 + 0.01 * i;
    const double val = k.evaluate(u, 0.0, Vec{0.0})[0];
    const double exact = std::pow(u, alpha);
    worst = std::max(worst, std::abs(val - exact) / exact);
  }
  report(12, "fractional kernel relative accuracy", worst <= 1e-2,
         "max rel err=" + fmt(worst));
}

// 13. CLI determinism: identical (config, seed) give byte-identical CSV
// regardless of SVDE_THREADS.
void criterion_determinism(const std::string& svde_bin) {
  if (svde_bin.empty()) {
    report(13, "CLI byte-determinism across thread counts", false,
           "missing --svde-bin");
    return;
  }
  const std::string cfg_path = "acceptance_c13.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "kernel = cos_x\nT = 0.5\nN = 200\nn_paths = 2000\nseed = 33\n";
  }
  auto run = [&](const std::string& threads, const std::string& out) {
    const std::string cmd = "SVDE_THREADS=" + threads + " \"" + svde_bin +
                            "\" girsanov-check --config " + cfg_path +
                            " --assert --out " + out + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  const int rc1 = run("1", "acceptance_c13_a.csv");
  const int rc3 = run("3", "acceptance_c13_b.csv");
  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string a = slurp("acceptance_c13_a.csv");
  const std::string b = slurp("acceptance_c13_b.csv");
  const bool pass = rc1 == 0 && rc3 == 0 && !a.empty() && a == b;
  report(13, "CLI byte-determinism across thread counts", pass,
         "bytes=" + std::to_string(a.size()) +
             (a == b ? ", identical" : ", MISMATCH") + ", exit codes " +
             std::to_string(rc1) + "/" + std::to_string(rc3));
}

}  // namespace

int main(int argc, char** argv) {
  std::string svde_bin;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--svde-bin") svde_bin = argv[i + 1];

  criterion_cauchy();
  criterion_cosh();
  criterion_exp();
  criterion_weights();
  criterion_estimators();
  criterion_reconstruction();
  criterion_flow_fd();
  criterion_malliavin_exp();
  criterion_holder();
  criterion_mollify();
  criterion_sin_kernel();
  criterion_fractional();
  criterion_determinism(svde_bin);

  std::printf("%d of 13 criteria failed\n", g_failures);
  return g_failures;
}
