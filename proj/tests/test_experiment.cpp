#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>

#include "svde/experiment.hpp"

using namespace svde;

namespace {

ExperimentConfig parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ExperimentConfig parsed_and_validated(const std::string& text) {
  ExperimentConfig cfg = parse_text(text);
  validate_config(cfg);
  return cfg;
}

}  // namespace

TEST_CASE("config parser reads keys, lists and comments") {
  const ExperimentConfig cfg = parse_text(
      "# experiment\n"
      "command = oracle-compare\n"
      "kernel = cos_x   # smooth drift\n"
      "T = 0.5\n"
      "N = 200\n"
      "d = 1\n"
      "x = 0.25\n"
      "seed = 99\n"
      "n_paths = 5000\n"
      "phi = id, square, sin\n"
      "\n");
  REQUIRE(cfg.command == "oracle-compare");
  REQUIRE(cfg.kernel.preset == "cos_x");
  REQUIRE(cfg.horizon == 0.5);
  REQUIRE(cfg.steps == 200);
  REQUIRE(cfg.seed == 99);
  REQUIRE(cfg.n_paths == 5000);
  REQUIRE(cfg.phi == std::vector<std::string>{"id", "square", "sin"});
}

TEST_CASE("config parser rejects malformed input") {
  REQUIRE_THROWS_AS(parse_text("no equals sign here\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_text("unknown_key = 3\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_text("T = not_a_number\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_text("N = 100\nN = 200\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_text("= 5\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_text("noise = maybe\n"), ConfigError);
}

TEST_CASE("validation catches inconsistent configurations") {
  REQUIRE_THROWS_AS(parsed_and_validated("command = fly\n"), ConfigError);
  REQUIRE_THROWS_AS(parsed_and_validated("command = solve\nT = -1\n"), ConfigError);
  REQUIRE_THROWS_AS(parsed_and_validated("command = solve\nkernel = warp\n"),
                    ConfigError);
  REQUIRE_THROWS_AS(
      parsed_and_validated("command = solve\nd = 2\nx = 1,2,3\n"), ConfigError);
  REQUIRE_THROWS_AS(
      parsed_and_validated("command = solve\nN = 10\nt_index = 11\n"), ConfigError);
  REQUIRE_THROWS_AS(
      parsed_and_validated("command = girsanov-check\nn_paths = 1\n"), ConfigError);
  REQUIRE_THROWS_AS(
      parsed_and_validated("command = oracle-compare\nphi = warp\n"), ConfigError);
  REQUIRE_THROWS_AS(
      parsed_and_validated("command = solve\nkernel = fractional\nT = 2.5\n"),
      ConfigError);
  REQUIRE_THROWS_AS(
      parsed_and_validated("command = mollify-study\nkernel = sign_x\nT = 0.5\n"
                           "levels = 4,4\n"),
      ConfigError);
  REQUIRE_THROWS_AS(
      parsed_and_validated("command = cauchy-check\nf = cubic\n"), ConfigError);
  REQUIRE_THROWS_AS(
      parsed_and_validated("command = holder-study\nkernel = cos_x\nN = 64\n"),
      ConfigError);
}

TEST_CASE("validation resolves defaults") {
  ExperimentConfig cfg = parsed_and_validated(
      "command = solve\nkernel = constant\nd = 3\nN = 50\nx = 0.5\n");
  REQUIRE(cfg.x == Vec{0.5, 0.5, 0.5});
  REQUIRE(cfg.t_index == 50);
}

TEST_CASE("solve without noise reports the deterministic terminal state") {
  ExperimentConfig cfg = parsed_and_validated(
      "command = solve\nkernel = constant\nc = 2\nT = 1\nN = 16\nnoise = off\n");
  const RunOutcome outcome = run_experiment(cfg);
  REQUIRE(outcome.checks_passed);
  REQUIRE(outcome.rows.size() == 2);
  REQUIRE(outcome.rows[0].metric == "X_final_0");
  REQUIRE(outcome.rows[0].value == Catch::Approx(2.0).margin(1e-13));
  REQUIRE(outcome.rows[1].metric == "tail_bound");
}

TEST_CASE("cauchy-check rows decrease with refinement") {
  ExperimentConfig cfg = parsed_and_validated(
      "command = cauchy-check\nf = linear\nk = 2\nT = 1\nN = 200\nrefine_levels = 3\n");
  const RunOutcome outcome = run_experiment(cfg);
  REQUIRE(outcome.checks_passed);
  REQUIRE(outcome.rows.size() == 4);
  REQUIRE(outcome.rows[0].value > outcome.rows[1].value);
  REQUIRE(outcome.rows[1].value > outcome.rows[2].value);
  REQUIRE(outcome.rows[3].metric == "order");
  REQUIRE(outcome.rows[3].value == Catch::Approx(1.0).margin(0.3));
}

TEST_CASE("girsanov-check passes its own martingale test") {
  ExperimentConfig cfg = parsed_and_validated(
      "command = girsanov-check\nkernel = cos_x\nT = 0.5\nN = 64\n"
      "n_paths = 4000\nseed = 5\n");
  const RunOutcome outcome = run_experiment(cfg);
  REQUIRE(outcome.checks_passed);
  REQUIRE(outcome.rows[0].metric == "mean_weight");
  REQUIRE(std::abs(outcome.rows[0].value - 1.0) <= 3.0 * outcome.rows[0].std_error);
  REQUIRE(outcome.warnings.empty());
}

TEST_CASE("oracle-compare agrees across estimators on a smooth kernel") {
  ExperimentConfig cfg = parsed_and_validated(
      "command = oracle-compare\nkernel = cos_x\nT = 0.5\nN = 100\n"
      "n_paths = 4000\nseed = 7\nphi = id,square\n");
  const RunOutcome outcome = run_experiment(cfg);
  REQUIRE(outcome.checks_passed);
  REQUIRE(outcome.rows.size() == 6);
}

TEST_CASE("derivative-check validates gradients and matches finite differences") {
  REQUIRE_THROWS_AS(
      run_experiment(parsed_and_validated(
          "command = derivative-check\nkernel = sign_x\nT = 0.5\nN = 64\n")),
      ConfigError);

  ExperimentConfig cfg = parsed_and_validated(
      "command = derivative-check\nkernel = cos_x\nT = 0.5\nN = 500\n"
      "fd_paths = 20\nseed = 3\n");
  const RunOutcome outcome = run_experiment(cfg);
  REQUIRE(outcome.checks_passed);
  REQUIRE(outcome.rows[0].metric == "fd_match_fraction");
  REQUIRE(outcome.rows[0].value >= 0.95);
}

TEST_CASE("csv output is byte-identical across thread counts") {
  const std::string text =
      "command = girsanov-check\nkernel = cos_x\nT = 0.5\nN = 32\n"
      "n_paths = 900\nseed = 12\n";

  setenv("SVDE_THREADS", "1", 1);
  ExperimentConfig cfg1 = parsed_and_validated(text);
  const std::string csv1 = render_csv(cfg1, run_experiment(cfg1).rows);

  setenv("SVDE_THREADS", "3", 1);
  ExperimentConfig cfg3 = parsed_and_validated(text);
  const std::string csv3 = render_csv(cfg3, run_experiment(cfg3).rows);

  setenv("SVDE_THREADS", "0", 1);
  ExperimentConfig cfg0 = parsed_and_validated(text);
  const std::string csv0 = render_csv(cfg0, run_experiment(cfg0).rows);
  unsetenv("SVDE_THREADS");

  REQUIRE(csv1 == csv3);
  REQUIRE(csv1 == csv0);
  REQUIRE(csv1.rfind("command,kernel,T,N,d,n_paths,seed,metric,value,std_error\n",
                     0) == 0);
  // Every data line carries the fixed prefix.
  REQUIRE(csv1.find("girsanov-check,cos_x,0.5,32,1,900,12,mean_weight,") !=
          std::string::npos);
}

TEST_CASE("csv renders 17 significant digits with dot decimals") {
  ExperimentConfig cfg = parsed_and_validated(
      "command = solve\nkernel = constant\nT = 1\nN = 4\nnoise = off\n");
  const std::vector<OutputRow> rows = {{"value_probe", 1.0 / 3.0, 0.125}};
  const std::string csv = render_csv(cfg, rows);
  REQUIRE(csv.find("0.33333333333333331") != std::string::npos);
  REQUIRE(csv.find("0.125") != std::string::npos);
  REQUIRE(csv.find('\r') == std::string::npos);
}

TEST_CASE("holder-study command produces a positive slope for cos_x") {
  ExperimentConfig cfg = parsed_and_validated(
      "command = holder-study\nkernel = cos_x\nT = 1\nN = 128\n"
      "n_paths = 400\nseed = 21\nlevels =\n");
  REQUIRE(cfg.levels.empty());
  const RunOutcome outcome = run_experiment(cfg);
  REQUIRE(outcome.checks_passed);
  bool found_slope = false;
  for (const OutputRow& row : outcome.rows)
    if (row.metric == "slope") {
      found_slope = true;
      REQUIRE(row.value > 0.0);
    }
  REQUIRE(found_slope);
}

TEST_CASE("mollify-study checks its own convergence trend") {
  ExperimentConfig cfg = parsed_and_validated(
      "command = mollify-study\nkernel = sign_x\nT = 0.5\nN = 64\n"
      "n_paths = 3000\nseed = 9\nlevels = 4,16\nquad_points = 12\n"
      "phi = bounded_id\nx = 0.3\n");
  const RunOutcome outcome = run_experiment(cfg);
  REQUIRE(outcome.rows.size() >= 5);
  REQUIRE(outcome.rows[0].metric == "euler_n4");
  REQUIRE(outcome.rows[2].metric == "girsanov_ref");
  REQUIRE(outcome.checks_passed);
}

TEST_CASE("reweighting commands reject monomially ill-conditioned kernels") {
  // solve handles the long fractional expansion through its factored path...
  const ExperimentConfig ok = parsed_and_validated(
      "command = solve\nkernel = fractional\nalpha = -0.4\nn_max = 200\n"
      "T = 1.5\nN = 400\nx = 1\nnoise = off\n");
  const RunOutcome out = run_experiment(ok);
  REQUIRE(out.rows.size() == 2);
  REQUIRE(out.rows[0].metric == "X_final_0");
  REQUIRE(std::isfinite(out.rows[0].value));
  const double continuum = 1.0 + std::pow(1.5, 0.6) / 0.6;
  REQUIRE(std::abs(out.rows[0].value - continuum) <= 0.25);

  // ...but the weight machinery has no factored form and must refuse early.
  REQUIRE_THROWS_AS(
      parsed_and_validated(
          "command = girsanov-check\nkernel = fractional\nalpha = -0.4\n"
          "n_max = 200\nT = 1.5\nN = 64\nn_paths = 100\nx = 0\n"),
      ConfigError);
  REQUIRE_THROWS_AS(
      parsed_and_validated(
          "command = oracle-compare\nkernel = fractional\nalpha = -0.4\n"
          "n_max = 200\nT = 1.5\nN = 64\nn_paths = 100\nx = 0\n"),
      ConfigError);

  // short expansions of the same kernel pass validation.
  REQUIRE_NOTHROW(parsed_and_validated(
      "command = girsanov-check\nkernel = fractional\nalpha = -0.4\n"
      "n_max = 6\nT = 1.5\nN = 64\nn_paths = 100\nx = 0\n"));
}

TEST_CASE("solve with an empty poly kernel and suppressed noise returns x") {
  const ExperimentConfig cfg = parsed_and_validated(
      "command = solve\nkernel = poly\nT = 1\nN = 4\nx = 0.75\nnoise = off\n");
  const RunOutcome out = run_experiment(cfg);
  REQUIRE(out.rows[0].metric == "X_final_0");
  REQUIRE(out.rows[0].value == 0.75);
  REQUIRE(out.rows[1].metric == "tail_bound");
  REQUIRE(out.rows[1].value == 0.0);
}
