#include "evonet/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "evonet/errors.hpp"

#ifndef EVONET_BUILD_ID
#define EVONET_BUILD_ID "unknown"
#endif

namespace evonet {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

void expect_keys(const json& obj, const std::string& where,
                 std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end())
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

}  // namespace

std::string build_id() { return EVONET_BUILD_ID; }

std::uint64_t fold_seed(std::uint64_t base_seed, std::size_t fold_index) {
  return base_seed + static_cast<std::uint64_t>(fold_index) * 1000003ULL;
}

RunConfigFile load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(file);
  } catch (const json::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }

  expect_keys(doc, "config",
              {"dataset", "experiment", "out_dir", "seed", "parallel_folds",
               "stratified", "sweep_percents", "evolution"});

  RunConfigFile cfg;

  if (!doc.contains("dataset")) throw ConfigError("config needs a 'dataset' section");
  const json& ds = doc.at("dataset");
  expect_keys(ds, "dataset", {"path", "target_columns", "one_hot", "header", "name"});
  read_field(ds, "path", cfg.dataset_path);
  if (cfg.dataset_path.empty()) throw ConfigError("dataset.path is required");
  read_field(ds, "target_columns", cfg.schema.target_columns);
  if (cfg.schema.target_columns.empty())
    throw ConfigError("dataset.target_columns is required");
  read_field(ds, "one_hot", cfg.schema.one_hot);
  read_field(ds, "header", cfg.schema.header);
  read_field(ds, "name", cfg.dataset_name);
  if (cfg.dataset_name.empty())
    cfg.dataset_name = std::filesystem::path(cfg.dataset_path).stem().string();

  read_field(doc, "experiment", cfg.experiment);
  if (cfg.experiment != "single" && cfg.experiment != "cv5x2" &&
      cfg.experiment != "sweep")
    throw ConfigError("experiment must be single, cv5x2 or sweep");
  read_field(doc, "out_dir", cfg.out_dir);
  read_field(doc, "seed", cfg.evolution.seed);
  read_field(doc, "parallel_folds", cfg.parallel_folds);
  read_field(doc, "stratified", cfg.stratified);
  read_field(doc, "sweep_percents", cfg.sweep_percents);

  if (doc.contains("evolution")) {
    const json& evo = doc.at("evolution");
    expect_keys(evo, "evolution",
                {"population_size", "crossover_rate", "mutation_prob",
                 "tournament_k", "penalty", "n_int", "f_sel_percent",
                 "effort_budget", "validation_fraction", "grammar", "ga"});
    EvolutionConfig& e = cfg.evolution;
    read_field(evo, "population_size", e.population_size);
    read_field(evo, "crossover_rate", e.crossover_rate);
    read_field(evo, "mutation_prob", e.mutation_prob);
    read_field(evo, "tournament_k", e.tournament_k);
    read_field(evo, "penalty", e.penalty);
    read_field(evo, "n_int", e.n_int);
    read_field(evo, "f_sel_percent", e.f_sel_percent);
    read_field(evo, "effort_budget", e.effort_budget);
    read_field(evo, "validation_fraction", e.validation_fraction);
    if (evo.contains("grammar")) {
      const json& g = evo.at("grammar");
      expect_keys(g, "evolution.grammar",
                  {"max_inputs_per_neuron", "max_height", "constant_range"});
      read_field(g, "max_inputs_per_neuron", e.grammar.max_inputs_per_neuron);
      read_field(g, "max_height", e.grammar.max_height);
      read_field(g, "constant_range", e.grammar.constant_range);
    }
    if (evo.contains("ga")) {
      const json& g = evo.at("ga");
      expect_keys(g, "evolution.ga",
                  {"i_ga", "n_ga", "n_gagen", "stall_generations",
                   "crossover_prob", "mutation_sigma"});
      read_field(g, "i_ga", e.ga.i_ga);
      read_field(g, "n_ga", e.ga.n_ga);
      read_field(g, "n_gagen", e.ga.n_gagen);
      read_field(g, "stall_generations", e.ga.stall_generations);
      read_field(g, "crossover_prob", e.ga.crossover_prob);
      read_field(g, "mutation_sigma", e.ga.mutation_sigma);
    }
  }

  cfg.evolution.validate();
  if (cfg.evolution.grammar.max_height < 2)
    throw ConfigError("grammar.max_height must be >= 2");
  if (cfg.evolution.grammar.max_inputs_per_neuron < 1)
    throw ConfigError("grammar.max_inputs_per_neuron must be >= 1");
  if (!(cfg.evolution.grammar.constant_range > 0.0))
    throw ConfigError("grammar.constant_range must be > 0");
  return cfg;
}

Dataset load_experiment_dataset(const RunConfigFile& cfg, LoadReport* report) {
  Dataset raw = load_csv(cfg.dataset_path, cfg.schema, report);
  Dataset ds = normalize(raw);
  ds.name = cfg.dataset_name;
  return ds;
}

RunReport run_fold(const EvolutionConfig& evo_in, double validation_fraction,
                   const Dataset& train_pool, const Dataset& test,
                   std::uint64_t seed, bool stratified) {
  EvolutionConfig evo = evo_in;
  evo.seed = seed;
  evo.validation_fraction = validation_fraction;
  evo.grammar.num_inputs = train_pool.input_width;
  evo.grammar.num_outputs = train_pool.target_width;

  if (validation_fraction > 0.0) {
    // The validation patterns are extracted from the training pool by a
    // plain random draw, not a stratified one: model selection then has to
    // cope with whatever class mix the draw produced, which is the point
    // of sweeping the validation share.
    const auto parts =
        split(train_pool,
              {1.0 - validation_fraction, validation_fraction, 0.0},
              /*stratified=*/false, seed ^ 0x9e3779b97f4a7c15ULL);
    return run(evo, parts[0], &parts[1], &test);
  }
  return run(evo, train_pool, nullptr, &test);
}

CvRunResult run_cv5x2(const RunConfigFile& cfg, const Dataset& data) {
  CvRunResult result;
  result.fold_reports.resize(10);

  const auto runner = [&](const Dataset& train, const Dataset& test,
                          int iteration, int fold) {
    const std::size_t fold_index =
        static_cast<std::size_t>(2 * iteration + fold);
    RunReport report =
        run_fold(cfg.evolution, cfg.evolution.validation_fraction, train, test,
                 fold_seed(cfg.evolution.seed, fold_index), cfg.stratified);
    const double accuracy = report.test_accuracy.value_or(0.0);
    result.fold_reports[fold_index] = std::move(report);
    return accuracy;
  };

  result.outcome = five_by_two_cv(data, runner, cfg.evolution.seed,
                                  cfg.stratified, cfg.parallel_folds);
  return result;
}

namespace {

ojson config_to_json(const RunConfigFile& cfg) {
  ojson doc;
  doc["dataset"] = {{"path", cfg.dataset_path},
                    {"name", cfg.dataset_name},
                    {"target_columns", cfg.schema.target_columns},
                    {"one_hot", cfg.schema.one_hot},
                    {"header", cfg.schema.header}};
  doc["experiment"] = cfg.experiment;
  doc["out_dir"] = cfg.out_dir;
  doc["stratified"] = cfg.stratified;
  doc["parallel_folds"] = cfg.parallel_folds;
  const EvolutionConfig& e = cfg.evolution;
  doc["evolution"] = {
      {"population_size", e.population_size},
      {"crossover_rate", e.crossover_rate},
      {"mutation_prob", e.mutation_prob},
      {"tournament_k", e.tournament_k},
      {"penalty", e.penalty},
      {"n_int", e.n_int},
      {"f_sel_percent", e.f_sel_percent},
      {"effort_budget", e.effort_budget},
      {"validation_fraction", e.validation_fraction},
      {"seed", e.seed},
      {"grammar",
       {{"max_inputs_per_neuron", e.grammar.max_inputs_per_neuron},
        {"max_height", e.grammar.max_height},
        {"constant_range", e.grammar.constant_range}}},
      {"ga",
       {{"i_ga", e.ga.i_ga},
        {"n_ga", e.ga.n_ga},
        {"n_gagen", e.ga.n_gagen},
        {"stall_generations", e.ga.stall_generations},
        {"crossover_prob", e.ga.crossover_prob},
        {"mutation_sigma", e.ga.mutation_sigma}}}};
  return doc;
}

ojson topology_to_json(const RunReport& report) {
  return {{"reachable_neurons", report.reachable_neurons},
          {"hidden_neurons", report.topology.hidden_neurons},
          {"connections", report.topology.connections},
          {"used_features", report.topology.used_features}};
}

ojson report_to_json(const RunReport& report) {
  ojson doc;
  doc["best_fitness"] = report.best_fitness;
  doc["train_mse"] = report.train_mse;
  doc["validation_mse"] =
      report.validation_mse ? ojson(*report.validation_mse) : ojson(nullptr);
  doc["validation_fitness"] = report.validation_fitness
                                  ? ojson(*report.validation_fitness)
                                  : ojson(nullptr);
  doc["test_accuracy"] =
      report.test_accuracy ? ojson(*report.test_accuracy) : ojson(nullptr);
  doc["effort_used"] = report.effort_used;
  doc["effort_budget"] = report.effort_budget;
  doc["generations_executed"] = report.trace.size();
  doc["evaluations"] = {{"initial", report.evals_initial},
                        {"gp", report.evals_gp},
                        {"ga", report.evals_ga}};
  doc["topology"] = topology_to_json(report);
  doc["used_feature_indices"] = report.used_feature_indices;
  return doc;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_trace_csv(const std::filesystem::path& path,
                     const RunReport& report) {
  std::ostringstream os;
  os << "effort,best_fitness,mean_fitness\n";
  os.precision(17);
  for (const GenerationTrace& t : report.trace)
    os << t.effort << ',' << t.best_fitness << ',' << t.mean_fitness << '\n';
  write_file(path, os.str());
}

ojson dataset_info_json(const Dataset& ds, const LoadReport& load) {
  return {{"name", ds.name},
          {"patterns", ds.pattern_count()},
          {"inputs", ds.input_width},
          {"outputs", ds.target_width},
          {"rows_dropped_missing", load.rows_dropped_missing}};
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const EmptyFile& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InconsistentWidth& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DegenerateSplit& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const EmptyDataset& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}

RunConfigFile load_with_overrides(const std::string& config_path,
                                  const CliOverrides& overrides) {
  RunConfigFile cfg = load_config(config_path);
  if (overrides.seed) cfg.evolution.seed = *overrides.seed;
  if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
  if (overrides.budget) cfg.evolution.effort_budget = *overrides.budget;
  if (overrides.parallel_folds) cfg.parallel_folds = *overrides.parallel_folds;
  cfg.evolution.validate();
  return cfg;
}

}  // namespace

int cmd_run(const std::string& config_path, const CliOverrides& overrides) {
  return guarded([&] {
    const RunConfigFile cfg = load_with_overrides(config_path, overrides);
    LoadReport load;
    const Dataset data = load_experiment_dataset(cfg, &load);

    // The standard single-run protocol: 70% training pool, 30% test, with
    // the configured validation fraction carved out of the pool.
    const auto parts =
        split(data, {0.7, 0.0, 0.3}, cfg.stratified, cfg.evolution.seed);
    const RunReport report =
        run_fold(cfg.evolution, cfg.evolution.validation_fraction, parts[0],
                 parts[2], cfg.evolution.seed, cfg.stratified);

    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path out(cfg.out_dir);

    ojson doc;
    doc["build"] = build_id();
    doc["config"] = config_to_json(cfg);
    doc["dataset"] = dataset_info_json(data, load);
    doc["result"] = report_to_json(report);
    write_file(out / "report.json", doc.dump(2) + "\n");
    write_file(out / "best_network.json", to_json(report.best_network));
    write_file(out / "best_network.dot", to_dot(report.best_network));
    write_trace_csv(out / "trace.csv", report);

    std::cout << data.name << ": test accuracy "
              << (report.test_accuracy ? *report.test_accuracy : 0.0)
              << ", train mse " << report.train_mse << ", effort "
              << report.effort_used << "\n";
    return 0;
  });
}

int cmd_cv5x2(const std::string& config_path, const CliOverrides& overrides) {
  return guarded([&] {
    const RunConfigFile cfg = load_with_overrides(config_path, overrides);
    LoadReport load;
    const Dataset data = load_experiment_dataset(cfg, &load);

    const CvRunResult result = run_cv5x2(cfg, data);

    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path out(cfg.out_dir);

    double mean_hidden = 0.0, mean_connections = 0.0, mean_features = 0.0,
           mean_reachable = 0.0;
    for (const RunReport& r : result.fold_reports) {
      mean_hidden += static_cast<double>(r.topology.hidden_neurons);
      mean_connections += static_cast<double>(r.topology.connections);
      mean_features += static_cast<double>(r.topology.used_features);
      mean_reachable += static_cast<double>(r.reachable_neurons);
    }
    const double folds = static_cast<double>(result.fold_reports.size());

    ojson doc;
    doc["build"] = build_id();
    doc["config"] = config_to_json(cfg);
    doc["dataset"] = dataset_info_json(data, load);
    doc["accuracies"] = result.outcome.accuracies;
    doc["mean_accuracy"] = result.outcome.mean;
    doc["stddev_accuracy"] = result.outcome.stddev;
    doc["mean_topology"] = {{"reachable_neurons", mean_reachable / folds},
                            {"hidden_neurons", mean_hidden / folds},
                            {"connections", mean_connections / folds},
                            {"used_features", mean_features / folds}};
    doc["folds"] = ojson::array();
    for (std::size_t f = 0; f < result.fold_reports.size(); ++f) {
      const RunReport& r = result.fold_reports[f];
      ojson entry;
      entry["iteration"] = f / 2;
      entry["fold"] = f % 2;
      entry["seed"] = fold_seed(cfg.evolution.seed, f);
      entry["accuracy"] = r.test_accuracy.value_or(0.0);
      entry["effort_used"] = r.effort_used;
      entry["topology"] = topology_to_json(r);
      entry["used_feature_indices"] = r.used_feature_indices;
      doc["folds"].push_back(std::move(entry));
    }
    write_file(out / "cv_report.json", doc.dump(2) + "\n");
    write_file(out / "folds.json",
               cv_plan_to_json(make_cv_plan(data, cfg.evolution.seed,
                                            cfg.stratified)));

    std::cout << data.name << ": 5x2cv mean accuracy " << result.outcome.mean
              << " (stddev " << result.outcome.stddev << ")\n";
    return 0;
  });
}

int cmd_sweep_validation(const std::string& config_path,
                         const CliOverrides& overrides,
                         const std::vector<double>& percents_arg) {
  return guarded([&] {
    const RunConfigFile base = load_with_overrides(config_path, overrides);
    std::vector<double> percents =
        percents_arg.empty() ? base.sweep_percents : percents_arg;
    if (percents.empty()) percents = {0, 10, 20, 30, 40, 50};
    for (double p : percents)
      if (p < 0.0 || p > 50.0)
        throw ConfigError("validation percent " + std::to_string(p) +
                          " outside [0, 50]");

    LoadReport load;
    const Dataset data = load_experiment_dataset(base, &load);

    std::ostringstream csv;
    csv << "validation_percent,dataset,mean_accuracy,stddev_accuracy\n";
    csv.precision(17);
    ojson rows = ojson::array();
    for (double percent : percents) {
      RunConfigFile cfg = base;
      cfg.evolution.validation_fraction = percent / 100.0;
      const CvRunResult result = run_cv5x2(cfg, data);
      csv << percent << ',' << data.name << ',' << result.outcome.mean << ','
          << result.outcome.stddev << '\n';
      rows.push_back({{"validation_percent", percent},
                      {"mean_accuracy", result.outcome.mean},
                      {"stddev_accuracy", result.outcome.stddev},
                      {"accuracies", result.outcome.accuracies}});
      std::cout << data.name << " @" << percent
                << "% validation: mean accuracy " << result.outcome.mean
                << "\n";
    }

    std::filesystem::create_directories(base.out_dir);
    const std::filesystem::path out(base.out_dir);
    write_file(out / "sweep.csv", csv.str());
    ojson doc;
    doc["build"] = build_id();
    doc["config"] = config_to_json(base);
    doc["dataset"] = dataset_info_json(data, load);
    doc["sweep"] = std::move(rows);
    write_file(out / "sweep.json", doc.dump(2) + "\n");
    return 0;
  });
}

}  // namespace evonet
