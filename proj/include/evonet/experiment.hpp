#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evonet/data.hpp"
#include "evonet/evolution.hpp"

namespace evonet {

/// One experiment definition as read from a config file.
struct RunConfigFile {
  std::string dataset_path;
  CsvSchema schema;
  std::string dataset_name;       // defaults to the file stem
  std::string experiment = "single";  // single | cv5x2 | sweep
  std::string out_dir = "out";
  EvolutionConfig evolution;
  std::vector<double> sweep_percents;  // validation percents for `sweep`
  bool stratified = true;
  unsigned parallel_folds = 1;
};

/// Command-line overrides applied on top of the config file.
struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> budget;
  std::optional<unsigned> parallel_folds;
};

/// Strict parse: unknown keys and invariant violations throw ConfigError
/// naming the offending field.
RunConfigFile load_config(const std::string& path);

std::string build_id();

/// Loads, normalizes and names the configured dataset.
Dataset load_experiment_dataset(const RunConfigFile& cfg, LoadReport* report = nullptr);

/// Seed for fold `fold_index` (0-based) of a cross-validation run.
std::uint64_t fold_seed(std::uint64_t base_seed, std::size_t fold_index);

/// One evolution run on a train/test pair: carves the configured validation
/// fraction out of the training pool (stratified, seeded), fills in the
/// grammar's input/output widths, runs, and reports test accuracy.
RunReport run_fold(const EvolutionConfig& evo, double validation_fraction,
                   const Dataset& train_pool, const Dataset& test,
                   std::uint64_t seed, bool stratified = true);

struct CvRunResult {
  CvOutcome outcome;
  std::vector<RunReport> fold_reports;  // (iteration, fold) order
};

/// The full 5x2cv protocol with per-fold effort budgets and derived seeds.
CvRunResult run_cv5x2(const RunConfigFile& cfg, const Dataset& data);

/// exit 0: success; 1: config or data error; 2: internal error.
int cmd_run(const std::string& config_path, const CliOverrides& overrides);
int cmd_cv5x2(const std::string& config_path, const CliOverrides& overrides);
int cmd_sweep_validation(const std::string& config_path,
                         const CliOverrides& overrides,
                         const std::vector<double>& percents);

}  // namespace evonet
