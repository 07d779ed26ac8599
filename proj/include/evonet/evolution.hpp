#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "evonet/data.hpp"
#include "evonet/decoder.hpp"
#include "evonet/grammar.hpp"
#include "evonet/network.hpp"
#include "evonet/weight_opt.hpp"

namespace evonet {

struct EvolutionConfig {
  std::size_t population_size = 1000;
  double crossover_rate = 0.95;   // fraction of offspring made by crossover
  double mutation_prob = 0.04;    // per-offspring mutation probability
  std::size_t tournament_k = 2;
  double penalty = 0.00001;       // parsimony: fitness = MSE + N * penalty
  GrammarConfig grammar;
  GaConfig ga;
  std::size_t n_int = 80;         // GP generations between weight optimizations
  double f_sel_percent = 10.0;    // share of the population the GA refines
  std::uint64_t effort_budget = 500000;
  double validation_fraction = 0.0;  // in [0, 0.5]
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

struct GenerationTrace {
  std::uint64_t effort = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
};

struct RunReport {
  GpTree best_tree;
  Network best_network;
  double best_fitness = 0.0;
  double train_mse = 0.0;
  std::optional<double> validation_mse;
  std::optional<double> validation_fitness;
  std::optional<double> test_accuracy;
  std::uint64_t effort_used = 0;
  std::uint64_t effort_budget = 0;
  std::vector<GenerationTrace> trace;  // initial population + one per generation
  std::size_t generations = 0;         // GP generations completed
  TopologyStats topology;
  std::size_t reachable_neurons = 0;   // raw reachable count (outputs included)
  std::vector<int> used_feature_indices;
  // Per-phase evaluation tallies, kept by the loop independently of the
  // effort counter so the two accountings can be cross-checked.
  std::uint64_t evals_initial = 0;
  std::uint64_t evals_gp = 0;
  std::uint64_t evals_ga = 0;
};

/// Parsimony-penalized fitness: decodes the tree, evaluates it on the
/// training set (one effort increment) and adds penalty * reachable-neuron
/// count to the MSE.
double fitness(const GpTree& tree, const Dataset& train, double penalty,
               EffortCounter* effort = nullptr);

/// The interleaved evolutionary loop:
///   1. ramped half-and-half initial population, all evaluated;
///   2. GA weight optimization of the f_sel% best unique individuals;
///   3. n_int generations of generational GP (tournament selection,
///      crossover_rate crossover offspring with the rest copied, mutation
///      with mutation_prob, elitism 1);
///   4. back to 2 until the effort budget is spent; the run stops mid-phase
///      at the exact evaluation where the budget runs out.
///
/// With a validation set, the generation-best individual is scored on it
/// each generation and the all-time validation best is returned
/// (early-stopping-style selection); otherwise the training-fitness best.
/// Validation and test evaluations do not consume effort.
/// Throws BudgetTooSmall when effort_budget < population_size.
RunReport run(const EvolutionConfig& config, const Dataset& train,
              const Dataset* validation = nullptr,
              const Dataset* test = nullptr,
              EffortCounter* external_effort = nullptr);

}  // namespace evonet
