#include "evonet/weight_opt.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "evonet/decoder.hpp"
#include "evonet/errors.hpp"
#include "evonet/evolution.hpp"

namespace evonet {

void GaConfig::validate() const {
  if (!(i_ga > 0.0)) throw ConfigError("ga.i_ga must be > 0");
  if (n_ga < 2) throw ConfigError("ga.n_ga must be >= 2");
  if (n_gagen < 1) throw ConfigError("ga.n_gagen must be >= 1");
  if (stall_generations < 1)
    throw ConfigError("ga.stall_generations must be >= 1");
  if (crossover_prob < 0.0 || crossover_prob > 1.0)
    throw ConfigError("ga.crossover_prob must be in [0, 1]");
  if (!(mutation_sigma > 0.0)) throw ConfigError("ga.mutation_sigma must be > 0");
}

namespace {

struct Chromosome {
  std::vector<double> genes;
  double fitness = 0.0;
};

// Evaluates chromosomes against one fixed topology. The network is decoded
// once; each connection weight is the sum of the constants that fed it, so
// applying a chromosome is a zero-then-scatter-add over the edges.
class ChromosomeEvaluator {
 public:
  ChromosomeEvaluator(const GpTree& tree, const Dataset& train, double penalty)
      : train_(train) {
    GrammarConfig cfg;
    cfg.num_inputs = train.input_width;
    cfg.num_outputs = tree.root.children.size();

    std::vector<WeightSource> sources;
    net_ = decode_traced(tree, cfg, &sources);
    penalty_term_ =
        static_cast<double>(count_neurons(net_)) * penalty;

    const auto constants = collect_constants(tree.root);
    std::unordered_map<const GpNode*, std::size_t> gene_index;
    gene_index.reserve(constants.size());
    for (std::size_t i = 0; i < constants.size(); ++i)
      gene_index.emplace(constants[i], i);

    bindings_.reserve(sources.size());
    for (const WeightSource& s : sources)
      bindings_.push_back({s.neuron, s.edge, gene_index.at(s.constant)});
  }

  double evaluate_genes(std::span<const double> genes, EffortCounter* effort) {
    for (auto& neuron : net_.neurons)
      for (auto& edge : neuron.incoming) edge.second = 0.0;
    for (const Binding& b : bindings_)
      net_.neurons[b.neuron].incoming[b.edge].second += genes[b.gene];
    return evaluate(net_, train_, effort).mse + penalty_term_;
  }

 private:
  struct Binding {
    std::size_t neuron;
    std::size_t edge;
    std::size_t gene;
  };
  const Dataset& train_;
  Network net_;
  std::vector<Binding> bindings_;
  double penalty_term_ = 0.0;
};

std::size_t ga_tournament2(const std::vector<Chromosome>& pop, Rng& rng) {
  const std::size_t n = pop.size();
  const std::size_t a = rng.index(n);
  std::size_t b = rng.index(n - 1);
  if (b >= a) ++b;
  return pop[a].fitness <= pop[b].fitness ? a : b;
}

}  // namespace

GpTree optimize_individual(const GpTree& tree, const Dataset& train,
                           const GaConfig& cfg, double penalty, Rng& rng,
                           EffortCounter* effort, std::uint64_t effort_limit,
                           std::uint64_t* evals_done) {
  const std::size_t gene_count = collect_constants(tree.root).size();
  if (gene_count == 0) return tree;

  auto can_charge = [&] {
    return effort == nullptr || effort->count() < effort_limit;
  };
  auto count_eval = [&] {
    if (evals_done) ++*evals_done;
  };

  ChromosomeEvaluator evaluator(tree, train, penalty);

  // Seed with the tree's own constants; its fitness is already known.
  std::vector<Chromosome> population;
  population.reserve(cfg.n_ga);
  {
    Chromosome seed;
    seed.genes.reserve(gene_count);
    for (const GpNode* c : collect_constants(tree.root))
      seed.genes.push_back(c->value);
    if (tree.cached_fitness) {
      seed.fitness = *tree.cached_fitness;
    } else {
      if (!can_charge()) return tree;
      seed.fitness = evaluator.evaluate_genes(seed.genes, effort);
      count_eval();
    }
    population.push_back(std::move(seed));
  }

  for (std::size_t i = 1; i < cfg.n_ga && can_charge(); ++i) {
    Chromosome c;
    c.genes.reserve(gene_count);
    for (std::size_t g = 0; g < gene_count; ++g)
      c.genes.push_back(rng.uniform(-cfg.i_ga, cfg.i_ga));
    c.fitness = evaluator.evaluate_genes(c.genes, effort);
    count_eval();
    population.push_back(std::move(c));
  }

  auto best_of = [](const std::vector<Chromosome>& pop) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pop.size(); ++i)
      if (pop[i].fitness < pop[best].fitness) best = i;
    return best;
  };

  const double mutation_prob = 1.0 / static_cast<double>(gene_count);
  std::size_t stall = 0;

  for (std::size_t gen = 0; gen < cfg.n_gagen && can_charge(); ++gen) {
    const std::size_t prev_best = best_of(population);
    const double prev_fitness = population[prev_best].fitness;
    const Chromosome elite = population[prev_best];

    std::vector<Chromosome> offspring;
    offspring.reserve(cfg.n_ga);
    while (offspring.size() < cfg.n_ga && can_charge()) {
      const Chromosome& p1 = population[ga_tournament2(population, rng)];
      const Chromosome& p2 = population[ga_tournament2(population, rng)];
      Chromosome c1{p1.genes, 0.0}, c2{p2.genes, 0.0};
      if (rng.chance(cfg.crossover_prob)) {
        for (std::size_t g = 0; g < gene_count; ++g) {
          const double alpha = rng.uniform01();  // per-gene blend
          c1.genes[g] = alpha * p1.genes[g] + (1.0 - alpha) * p2.genes[g];
          c2.genes[g] = (1.0 - alpha) * p1.genes[g] + alpha * p2.genes[g];
        }
      }
      for (Chromosome* c : {&c1, &c2}) {
        for (std::size_t g = 0; g < gene_count; ++g)
          if (rng.chance(mutation_prob))
            c->genes[g] = std::clamp(c->genes[g] + rng.gaussian(cfg.mutation_sigma),
                                     -cfg.i_ga, cfg.i_ga);
      }
      for (Chromosome* c : {&c1, &c2}) {
        if (offspring.size() >= cfg.n_ga || !can_charge()) break;
        c->fitness = evaluator.evaluate_genes(c->genes, effort);
        count_eval();
        offspring.push_back(std::move(*c));
      }
    }
    if (offspring.empty()) break;

    // Elitism: the previous best replaces the worst offspring unless an
    // offspring already matches or beats it.
    std::size_t new_best = best_of(offspring);
    if (offspring[new_best].fitness > elite.fitness) {
      std::size_t worst = 0;
      for (std::size_t i = 1; i < offspring.size(); ++i)
        if (offspring[i].fitness > offspring[worst].fitness) worst = i;
      offspring[worst] = elite;
    }
    population = std::move(offspring);

    const double best_fitness = population[best_of(population)].fitness;
    if (prev_fitness - best_fitness > 1e-12)
      stall = 0;
    else if (++stall >= cfg.stall_generations)
      break;
  }

  const Chromosome& best = population[best_of(population)];
  GpTree result{tree.root, best.fitness, std::nullopt};
  auto constants = collect_constants(result.root);
  for (std::size_t g = 0; g < gene_count; ++g)
    constants[g]->value = best.genes[g];
  return result;
}

std::size_t optimize_elite(std::vector<GpTree>& population,
                           double f_sel_percent, const Dataset& train,
                           const GaConfig& cfg, double penalty, Rng& rng,
                           EffortCounter* effort, std::uint64_t effort_limit,
                           std::uint64_t* evals_done) {
  if (population.empty()) return 0;
  const std::size_t target = static_cast<std::size_t>(std::ceil(
      f_sel_percent / 100.0 * static_cast<double>(population.size())));
  if (target == 0) return 0;

  std::vector<std::size_t> order;
  order.reserve(population.size());
  for (std::size_t i = 0; i < population.size(); ++i)
    if (population[i].cached_fitness) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return *population[a].cached_fitness < *population[b].cached_fitness;
  });

  // Best-first, skipping structural repeats of already selected trees.
  std::vector<std::size_t> selected;
  for (std::size_t idx : order) {
    if (selected.size() >= target) break;
    const bool repeat = std::any_of(
        selected.begin(), selected.end(), [&](std::size_t s) {
          return trees_equal(population[s].root, population[idx].root, 1e-12);
        });
    if (!repeat) selected.push_back(idx);
  }

  std::size_t optimized = 0;
  for (std::size_t idx : selected) {
    if (effort && effort->count() >= effort_limit) break;
    population[idx] = optimize_individual(population[idx], train, cfg, penalty,
                                          rng, effort, effort_limit, evals_done);
    ++optimized;
  }
  return optimized;
}

}  // namespace evonet
