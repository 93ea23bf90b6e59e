#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hadamard/experiment.hpp"

namespace ex = hadamard::experiment;

int main(int argc, char** argv) {
  CLI::App app{"Fixed-point iteration schemes on Hadamard spaces"};
  app.require_subcommand(1);

  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_iters;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--seed", seed, "override the config seed");
    cmd->add_option("--max-iters", max_iters, "override max_iterations");
  };
  CLI::App* run = app.add_subcommand("run", "run one scheme and write trace.csv and summary.json");
  CLI::App* check = app.add_subcommand("check", "run diagnostic checks and write report.json");
  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter grid and write aggregate.csv");
  add_common(run);
  add_common(check);
  add_common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ex::kConfigError;
  }

  try {
    const ex::json cfg = ex::read_json(config);
    const ex::Overrides ov{.seed = seed, .max_iterations = max_iters};
    if (run->parsed()) return ex::cmd_run(cfg, out, std::cerr, ov).code;
    if (check->parsed()) return ex::cmd_check(cfg, out, std::cerr, ov).code;
    return ex::cmd_sweep(cfg, out, std::cerr, ov).code;
  } catch (const hadamard::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return ex::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ex::kSolverError;
  }
}
