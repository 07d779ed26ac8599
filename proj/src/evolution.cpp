#include "evonet/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evonet/errors.hpp"

namespace evonet {

void EvolutionConfig::validate() const {
  if (population_size < 2) throw ConfigError("population_size must be >= 2");
  if (crossover_rate < 0.0 || crossover_rate > 1.0)
    throw ConfigError("crossover_rate must be in [0, 1]");
  if (mutation_prob < 0.0 || mutation_prob > 1.0)
    throw ConfigError("mutation_prob must be in [0, 1]");
  if (tournament_k < 1) throw ConfigError("tournament_k must be >= 1");
  if (penalty < 0.0) throw ConfigError("penalty must be >= 0");
  if (n_int < 1) throw ConfigError("n_int must be >= 1");
  if (f_sel_percent < 0.0 || f_sel_percent > 100.0)
    throw ConfigError("f_sel_percent must be in [0, 100]");
  if (effort_budget < 1) throw ConfigError("effort_budget must be >= 1");
  if (validation_fraction < 0.0 || validation_fraction > 0.5)
    throw ConfigError("validation_fraction must be in [0, 0.5]");
  ga.validate();
}

namespace {

struct TreeScore {
  double fitness;
  double mse;
  std::size_t reachable;
};

TreeScore score_tree(const GpTree& tree, const Dataset& train, double penalty,
                     EffortCounter* effort) {
  GrammarConfig cfg;
  cfg.num_inputs = train.input_width;
  cfg.num_outputs = tree.root.children.size();
  const Network net = decode(tree, cfg);
  const EvalMetrics metrics = evaluate(net, train, effort);
  const std::size_t reachable = count_neurons(net);
  return {metrics.mse + penalty * static_cast<double>(reachable), metrics.mse,
          reachable};
}

constexpr double kUnevaluated = std::numeric_limits<double>::infinity();

}  // namespace

double fitness(const GpTree& tree, const Dataset& train, double penalty,
               EffortCounter* effort) {
  return score_tree(tree, train, penalty, effort).fitness;
}

RunReport run(const EvolutionConfig& config, const Dataset& train,
              const Dataset* validation, const Dataset* test,
              EffortCounter* external_effort) {
  config.validate();
  if (train.pattern_count() == 0) throw EmptyDataset("run: empty training set");
  if (validation && validation->pattern_count() == 0) validation = nullptr;
  if (config.effort_budget < config.population_size)
    throw BudgetTooSmall("effort_budget " + std::to_string(config.effort_budget) +
                         " < population size " +
                         std::to_string(config.population_size));

  GrammarConfig grammar = config.grammar;
  if (grammar.num_inputs == 0) grammar.num_inputs = train.input_width;
  if (grammar.num_outputs == 0) grammar.num_outputs = train.target_width;
  grammar.validate();
  if (grammar.num_inputs != train.input_width ||
      grammar.num_outputs != train.target_width)
    throw ShapeMismatch("grammar widths do not match the training set");

  EffortCounter local_effort;
  EffortCounter* effort = external_effort ? external_effort : &local_effort;
  const std::uint64_t budget = config.effort_budget;
  auto exhausted = [&] { return effort->count() >= budget; };

  Rng rng(config.seed);
  RunReport report;
  report.effort_budget = budget;

  // Best-by-training-fitness ever seen (GA write-backs included).
  struct BestTrain {
    GpTree tree;
    double fitness = kUnevaluated;
  } best_train;

  // Best-by-validation-fitness candidate (generation bests only).
  struct BestValidation {
    GpTree tree;
    double fitness = kUnevaluated;
    double mse = 0.0;
    double train_fitness = 0.0;
    bool present = false;
  } best_val;
  GpTree last_validated;
  bool any_validated = false;

  auto note_train = [&](const GpTree& tree, double fit) {
    if (fit < best_train.fitness) best_train = {tree, fit};
  };

  std::vector<GpTree> population =
      ramped_half_and_half(grammar, config.population_size, rng);
  std::vector<double> fit(population.size(), kUnevaluated);

  // Evaluates every fresh individual until the budget gives out; returns
  // the number of evaluations performed.
  auto evaluate_population = [&]() -> std::uint64_t {
    std::uint64_t evals = 0;
    for (std::size_t i = 0; i < population.size(); ++i) {
      if (population[i].cached_fitness) {
        fit[i] = *population[i].cached_fitness;
        continue;
      }
      if (exhausted()) {
        fit[i] = kUnevaluated;
        continue;
      }
      const TreeScore score =
          score_tree(population[i], train, config.penalty, effort);
      ++evals;
      population[i].cached_fitness = score.fitness;
      fit[i] = score.fitness;
      note_train(population[i], score.fitness);
    }
    return evals;
  };

  auto population_best = [&]() -> std::size_t {
    std::size_t best = 0;
    for (std::size_t i = 1; i < population.size(); ++i) {
      if (fit[i] < fit[best]) {
        best = i;
      } else if (fit[i] == fit[best] && fit[i] != kUnevaluated &&
                 node_count(population[i].root) <
                     node_count(population[best].root)) {
        best = i;
      }
    }
    return best;
  };

  auto push_trace = [&] {
    double best = kUnevaluated, sum = 0.0;
    std::size_t evaluated = 0;
    for (double f : fit)
      if (f != kUnevaluated) {
        best = std::min(best, f);
        sum += f;
        ++evaluated;
      }
    report.trace.push_back(
        {effort->count(), best,
         evaluated ? sum / static_cast<double>(evaluated) : kUnevaluated});
  };

  // Scores the current generation champion on the validation set and keeps
  // the all-time best (the early-stopping-style selection rule).
  auto check_validation = [&] {
    if (!validation) return;
    const std::size_t idx = population_best();
    if (fit[idx] == kUnevaluated) return;
    const GpTree& cand = population[idx];
    if (any_validated && trees_equal(cand.root, last_validated.root)) return;
    last_validated = cand;
    any_validated = true;

    const Network net = decode(cand, grammar);
    const EvalMetrics metrics = evaluate(net, *validation, nullptr);
    const double n = static_cast<double>(count_neurons(net));
    const double val_fitness = metrics.mse + config.penalty * n;
    if (!best_val.present || val_fitness < best_val.fitness) {
      best_val.present = true;
      best_val.tree = cand;
      best_val.fitness = val_fitness;
      best_val.mse = metrics.mse;
      best_val.train_fitness = fit[idx];
    }
  };

  // Step 1: initial population.
  report.evals_initial = evaluate_population();
  push_trace();
  check_validation();

  bool out_of_budget = exhausted();
  while (!out_of_budget) {
    // Step 2: GA refinement of the best unique individuals.
    std::uint64_t ga_evals = 0;
    optimize_elite(population, config.f_sel_percent, train, config.ga,
                   config.penalty, rng, effort, budget, &ga_evals);
    report.evals_ga += ga_evals;
    for (std::size_t i = 0; i < population.size(); ++i) {
      if (!population[i].cached_fitness) continue;
      if (*population[i].cached_fitness < fit[i]) {
        fit[i] = *population[i].cached_fitness;
        note_train(population[i], fit[i]);
      }
    }
    check_validation();
    if (exhausted()) break;

    // Step 3: n_int generations of generational GP.
    for (std::size_t gen = 0; gen < config.n_int && !out_of_budget; ++gen) {
      std::vector<GpTree> next;
      next.reserve(population.size());
      next.push_back(population[population_best()]);  // elitism 1

      while (next.size() < population.size()) {
        const bool pair_fits = next.size() + 2 <= population.size();
        if (pair_fits && rng.chance(config.crossover_rate)) {
          const std::size_t p1 =
              tournament_select(population, fit, config.tournament_k, rng);
          const std::size_t p2 =
              tournament_select(population, fit, config.tournament_k, rng);
          auto [c1, c2] =
              subtree_crossover(population[p1], population[p2], grammar, rng);
          next.push_back(std::move(c1));
          next.push_back(std::move(c2));
        } else {
          const std::size_t p =
              tournament_select(population, fit, config.tournament_k, rng);
          next.push_back(population[p]);  // reproduction keeps the cache
        }
      }
      for (std::size_t i = 1; i < next.size(); ++i)  // elite is exempt
        if (rng.chance(config.mutation_prob))
          next[i] = mutate(next[i], grammar, rng);

      population = std::move(next);
      fit.assign(population.size(), kUnevaluated);
      report.evals_gp += evaluate_population();
      ++report.generations;
      push_trace();
      check_validation();
      if (exhausted()) out_of_budget = true;
    }
  }

  // Model selection: validation best when a validation set exists,
  // otherwise the training best. mse falls out of fitness = mse + P*N.
  const bool use_validation = validation && best_val.present;
  report.best_tree = use_validation ? best_val.tree : best_train.tree;
  report.best_network = decode(report.best_tree, grammar);
  report.reachable_neurons = count_neurons(report.best_network);
  report.best_fitness =
      use_validation ? best_val.train_fitness : best_train.fitness;
  report.train_mse =
      report.best_fitness -
      config.penalty * static_cast<double>(report.reachable_neurons);
  report.topology = topology_stats(report.best_network);
  report.used_feature_indices = used_features(report.best_network);
  report.effort_used = effort->count();

  if (use_validation) {
    report.validation_mse = best_val.mse;
    report.validation_fitness = best_val.fitness;
  }
  if (test && test->pattern_count() > 0)
    report.test_accuracy = evaluate(report.best_network, *test, nullptr).accuracy;

  return report;
}

}  // namespace evonet
