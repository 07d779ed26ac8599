#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "evonet/data.hpp"
#include "evonet/grammar.hpp"
#include "evonet/network.hpp"

namespace evonet {

/// Parameters of the real-coded GA that tunes one individual's constants.
struct GaConfig {
  double i_ga = 20.0;              // genes live in [-i_ga, +i_ga]
  std::size_t n_ga = 50;           // GA population size
  std::size_t n_gagen = 50;        // max GA generations
  std::size_t stall_generations = 5;  // stop after this many without improvement
  double crossover_prob = 0.9;     // arithmetic blend crossover
  double mutation_sigma = 2.0;     // per-gene gaussian step (i_ga / 10)

  void validate() const;  // throws ConfigError
};

/// Tunes the constants of one tree with a fresh GA: the chromosome is the
/// tree's constants in depth-first order, the population is seeded with the
/// tree's current values (reusing its cached fitness — no evaluation) plus
/// n_ga-1 uniform random chromosomes, and the best chromosome found is
/// written back into a copy of the tree along with its fitness. The returned
/// fitness is never worse than the input's. A tree with no constants is
/// returned unchanged at zero cost. Evaluation stops early when `effort`
/// reaches `effort_limit`.
GpTree optimize_individual(const GpTree& tree, const Dataset& train,
                           const GaConfig& cfg, double penalty, Rng& rng,
                           EffortCounter* effort = nullptr,
                           std::uint64_t effort_limit =
                               std::numeric_limits<std::uint64_t>::max(),
                           std::uint64_t* evals_done = nullptr);

/// Applies optimize_individual to the ceil(f_sel% * population_size)
/// best-fitness individuals, skipping repeats (structural equality with
/// constants compared to 12 decimals). Optimized trees are replaced in
/// place; everything else is untouched. Returns the number optimized.
std::size_t optimize_elite(std::vector<GpTree>& population,
                           double f_sel_percent, const Dataset& train,
                           const GaConfig& cfg, double penalty, Rng& rng,
                           EffortCounter* effort = nullptr,
                           std::uint64_t effort_limit =
                               std::numeric_limits<std::uint64_t>::max(),
                           std::uint64_t* evals_done = nullptr);

}  // namespace evonet
