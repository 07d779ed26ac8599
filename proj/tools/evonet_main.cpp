#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evonet/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"evonet - evolutionary generation and simplification of "
               "feedforward neural networks"};
  app.require_subcommand(1);

  std::string config_path;
  evonet::CliOverrides overrides;
  std::uint64_t seed_arg = 0;
  std::string out_dir_arg;
  std::uint64_t budget_arg = 0;
  unsigned parallel_arg = 0;
  std::vector<double> percents;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed_arg, "override the config seed");
    cmd->add_option("--out-dir", out_dir_arg, "override the output directory");
    cmd->add_option("--budget", budget_arg, "override the effort budget");
    cmd->add_option("--parallel-folds", parallel_arg,
                    "run cross-validation folds on this many threads");
  };

  CLI::App* run = app.add_subcommand("run", "one evolution run on a 70/30 split");
  add_common(run);
  CLI::App* cv = app.add_subcommand("cv5x2", "5x2 cross-validation benchmark");
  add_common(cv);
  CLI::App* sweep =
      app.add_subcommand("sweep", "validation-percent sweep over 5x2cv runs");
  add_common(sweep);
  sweep->add_option("--percents", percents,
                    "validation percents to sweep (defaults to config, then "
                    "0,10,20,30,40,50)")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 1 : 0;
  }

  auto fill = [&](CLI::App* cmd) {
    if (cmd->count("--seed")) overrides.seed = seed_arg;
    if (cmd->count("--out-dir")) overrides.out_dir = out_dir_arg;
    if (cmd->count("--budget")) overrides.budget = budget_arg;
    if (cmd->count("--parallel-folds")) overrides.parallel_folds = parallel_arg;
  };

  if (run->parsed()) {
    fill(run);
    return evonet::cmd_run(config_path, overrides);
  }
  if (cv->parsed()) {
    fill(cv);
    return evonet::cmd_cv5x2(config_path, overrides);
  }
  fill(sweep);
  return evonet::cmd_sweep_validation(config_path, overrides, percents);
}
