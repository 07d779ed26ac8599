#include <cmath>

#include <doctest.h>

#include "evonet/decoder.hpp"
#include "evonet/evolution.hpp"
#include "evonet/weight_opt.hpp"
#include "support/builders.hpp"

using namespace evonet;
namespace tst = evonet::testing;

namespace {

GrammarConfig grammar(std::size_t inputs, std::size_t outputs) {
  GrammarConfig cfg;
  cfg.num_inputs = inputs;
  cfg.num_outputs = outputs;
  return cfg;
}

// Two clusters either side of x0 = 0.5, separable by sign of (x0 - x1).
Dataset separable_toy() {
  return tst::dataset(2, 1,
                      {0.9, 0.1, 0.8, 0.2, 0.7, 0.1, 0.9, 0.3,
                       0.1, 0.9, 0.2, 0.8, 0.1, 0.7, 0.3, 0.9},
                      {1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0});
}

GaConfig small_ga() {
  GaConfig cfg;
  cfg.n_ga = 10;
  cfg.n_gagen = 10;
  return cfg;
}

// Edge structure only; weights ignored.
bool same_topology(const Network& a, const Network& b) {
  if (a.neurons.size() != b.neurons.size()) return false;
  if (a.output_slots != b.output_slots) return false;
  for (std::size_t k = 0; k < a.neurons.size(); ++k) {
    if (a.neurons[k].incoming.size() != b.neurons[k].incoming.size())
      return false;
    for (std::size_t e = 0; e < a.neurons[k].incoming.size(); ++e)
      if (a.neurons[k].incoming[e].first != b.neurons[k].incoming[e].first)
        return false;
  }
  return true;
}

}  // namespace

TEST_CASE("a tree without constants is returned unchanged at zero cost") {
  const GpTree t = tst::tree({tst::input(0)});
  const Dataset train = tst::dataset(1, 1, {0.2, 0.8}, {0.0, 1.0});
  Rng rng(301);
  EffortCounter effort;
  std::uint64_t evals = 0;
  const GpTree out = optimize_individual(t, train, small_ga(), 1e-5, rng,
                                         &effort, UINT64_MAX, &evals);
  CHECK(trees_equal(out.root, t.root, 0.0));
  CHECK(effort.count() == 0);
  CHECK(evals == 0);
}

TEST_CASE("optimization never worsens fitness and never changes topology") {
  const GrammarConfig cfg = grammar(2, 1);
  const Dataset train = separable_toy();
  Rng rng(307);
  int no_constants = 0;
  for (int i = 0; i < 200; ++i) {
    GpTree t = create_random_tree(cfg, CreationMethod::grow, 5, rng);
    if (collect_constants(t.root).empty()) {
      ++no_constants;
      continue;
    }
    const double before = fitness(t, train, 1e-5, nullptr);
    t.cached_fitness = before;

    Rng ga_rng(1000 + i);
    const GpTree optimized =
        optimize_individual(t, train, small_ga(), 1e-5, ga_rng);
    REQUIRE(optimized.cached_fitness.has_value());
    CHECK(*optimized.cached_fitness <= before + 1e-15);

    // Reported fitness is real, not just a cached claim.
    const double recomputed = fitness(optimized, train, 1e-5, nullptr);
    CHECK(recomputed == doctest::Approx(*optimized.cached_fitness).epsilon(1e-12));

    CHECK(same_topology(decode(t, cfg), decode(optimized, cfg)));
    for (const GpNode* c : collect_constants(optimized.root)) {
      CHECK(c->value >= -small_ga().i_ga);
      CHECK(c->value <= small_ga().i_ga);
    }
  }
  CHECK(no_constants < 150);  // the sample actually exercised the GA
}

TEST_CASE("evaluation count: seeding plus one full generation") {
  const GpTree t = tst::tree(
      {tst::neuron({tst::input(0), tst::input(1)}, {1.0, -1.0})});
  const Dataset train = separable_toy();

  GpTree seeded = t;
  seeded.cached_fitness = fitness(seeded, train, 1e-5, nullptr);

  GaConfig cfg;
  cfg.n_ga = 50;
  cfg.n_gagen = 1;
  Rng rng(311);
  EffortCounter effort;
  std::uint64_t evals = 0;
  optimize_individual(seeded, train, cfg, 1e-5, rng, &effort, UINT64_MAX, &evals);
  CHECK(effort.count() == 49 + 50);  // seed reuses its cached fitness
  CHECK(evals == 99);
}

TEST_CASE("effort stays within the proportionality bound") {
  const Dataset train = separable_toy();
  const GrammarConfig cfg = grammar(2, 1);
  GaConfig ga;
  ga.n_ga = 8;
  ga.n_gagen = 6;
  Rng rng(313);
  for (int i = 0; i < 50; ++i) {
    GpTree t = create_random_tree(cfg, CreationMethod::grow, 4, rng);
    if (collect_constants(t.root).empty()) continue;
    t.cached_fitness = fitness(t, train, 1e-5, nullptr);
    EffortCounter effort;
    optimize_individual(t, train, ga, 1e-5, rng, &effort);
    CHECK(effort.count() <= (ga.n_ga - 1) + ga.n_ga * ga.n_gagen);
  }
}

TEST_CASE("the optimizer beats random search on a separable toy problem") {
  const Dataset train = separable_toy();
  const GpTree t = tst::tree(
      {tst::neuron({tst::input(0), tst::input(1)}, {1.0, 1.0})});

  GaConfig cfg;  // paper-sized GA
  Rng rng(317);
  GpTree seeded = t;
  seeded.cached_fitness = fitness(seeded, train, 0.0, nullptr);
  const GpTree optimized = optimize_individual(seeded, train, cfg, 0.0, rng);

  // Independent oracle: the best of 10,000 uniform weight samples.
  Rng oracle_rng(9001);
  GrammarConfig g = grammar(2, 1);
  double best_random = 1e9;
  GpTree probe = t;
  auto constants = collect_constants(probe.root);
  for (int i = 0; i < 10000; ++i) {
    for (GpNode* c : constants) c->value = oracle_rng.uniform(-20.0, 20.0);
    best_random = std::min(best_random, fitness(probe, train, 0.0, nullptr));
  }
  CHECK(*optimized.cached_fitness <= best_random + 1e-12);
}

TEST_CASE("the configured share of unique individuals is optimized") {
  const GrammarConfig cfg = grammar(2, 1);
  const Dataset train = separable_toy();
  Rng rng(331);
  std::vector<GpTree> population = ramped_half_and_half(cfg, 1000, rng);
  for (GpTree& t : population)
    t.cached_fitness = fitness(t, train, 1e-5, nullptr);

  GaConfig ga;
  ga.n_ga = 3;
  ga.n_gagen = 1;
  const double best_before = [&] {
    double best = 1e9;
    for (const GpTree& t : population) best = std::min(best, *t.cached_fitness);
    return best;
  }();

  const std::size_t optimized =
      optimize_elite(population, 10.0, train, ga, 1e-5, rng);
  CHECK(optimized == 100);

  double best_after = 1e9;
  for (const GpTree& t : population)
    best_after = std::min(best_after, *t.cached_fitness);
  CHECK(best_after <= best_before);
}

TEST_CASE("a population of clones is optimized exactly once") {
  const Dataset train = separable_toy();
  const GpTree proto = tst::tree(
      {tst::neuron({tst::input(0), tst::input(1)}, {2.0, -2.0})});
  std::vector<GpTree> population(50, proto);
  for (GpTree& t : population)
    t.cached_fitness = fitness(t, train, 1e-5, nullptr);

  GaConfig ga;
  ga.n_ga = 3;
  ga.n_gagen = 1;
  Rng rng(337);
  CHECK(optimize_elite(population, 10.0, train, ga, 1e-5, rng) == 1);
}

TEST_CASE("optimization respects the effort limit") {
  const Dataset train = separable_toy();
  const GpTree t = tst::tree(
      {tst::neuron({tst::input(0), tst::input(1)}, {1.0, -1.0})});
  GpTree seeded = t;
  seeded.cached_fitness = fitness(seeded, train, 1e-5, nullptr);

  GaConfig cfg;
  Rng rng(347);
  EffortCounter effort;
  const GpTree out =
      optimize_individual(seeded, train, cfg, 1e-5, rng, &effort, 25);
  CHECK(effort.count() <= 25);
  CHECK(*out.cached_fitness <= *seeded.cached_fitness);
}
