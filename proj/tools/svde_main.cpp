// svde: batch runner for the singular-Volterra numerical laboratory.
//
//   svde <command> --config <file> [--assert] [--out <csv>]
//
// Exit codes: 0 success, 2 configuration/validation error, 3 statistical
// check failed under --assert.

#include <clocale>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "svde/experiment.hpp"

namespace {

struct CommandArgs {
  std::string config_path;
  std::string out_path;
  bool assert_checks = false;
};

int run_command(const std::string& command, const CommandArgs& args) {
  svde::ExperimentConfig cfg;
  try {
    std::ifstream in(args.config_path);
    if (!in) {
      std::cerr << "svde: cannot open config file '" << args.config_path << "'\n";
      return 2;
    }
    cfg = svde::parse_config(in);
    if (cfg.command.empty()) {
      cfg.command = command;
    } else if (cfg.command != command) {
      std::cerr << "svde: config names command '" << cfg.command
                << "' but the command line says '" << command << "'\n";
      return 2;
    }
    if (!args.out_path.empty()) cfg.out = args.out_path;
    svde::validate_config(cfg);
  } catch (const std::exception& e) {
    std::cerr << "svde: " << e.what() << "\n";
    return 2;
  }

  svde::RunOutcome outcome;
  try {
    outcome = svde::run_experiment(cfg);
  } catch (const std::exception& e) {
    std::cerr << "svde: " << e.what() << "\n";
    return 2;
  }

  for (const std::string& warning : outcome.warnings)
    std::cerr << "svde: warning: " << warning << "\n";

  const std::string csv = svde::render_csv(cfg, outcome.rows);
  if (cfg.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(cfg.out, std::ios::binary);
    if (!out) {
      std::cerr << "svde: cannot write output file '" << cfg.out << "'\n";
      return 2;
    }
    out << csv;
  }

  if (args.assert_checks && !outcome.checks_passed) {
    std::cerr << "svde: statistical checks failed for command '" << command << "'\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_ALL, "C");

  CLI::App app{"numerical laboratory for singular stochastic Volterra equations"};
  app.require_subcommand(1);

  std::string chosen;
  CommandArgs args;
  for (const std::string& name : svde::known_commands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", args.config_path, "experiment config file")
        ->required();
    sub->add_flag("--assert", args.assert_checks,
                  "exit 3 if the statistical checks fail");
    sub->add_option("--out", args.out_path, "write CSV here instead of stdout");
    sub->callback([&chosen, name]() { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return run_command(chosen, args);
}
