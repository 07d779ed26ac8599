#include "evonet/grammar.hpp"

#include <algorithm>
#include <cmath>

#include "evonet/errors.hpp"

namespace evonet {

void GrammarConfig::validate() const {
  if (num_inputs < 1) throw ConfigError("grammar.num_inputs must be >= 1");
  if (num_outputs < 1) throw ConfigError("grammar.num_outputs must be >= 1");
  if (max_inputs_per_neuron < 1)
    throw ConfigError("grammar.max_inputs_per_neuron must be >= 1");
  if (max_height < 2) throw ConfigError("grammar.max_height must be >= 2");
  if (!(constant_range > 0.0))
    throw ConfigError("grammar.constant_range must be > 0");
}

std::size_t tree_height(const GpNode& node) {
  std::size_t deepest = 0;
  for (const GpNode& child : node.children)
    deepest = std::max(deepest, tree_height(child));
  return deepest + 1;
}

std::size_t node_count(const GpNode& node) {
  std::size_t n = 1;
  for (const GpNode& child : node.children) n += node_count(child);
  return n;
}

namespace {

bool node_valid(const GpNode& node, const GrammarConfig& cfg, bool is_root) {
  switch (node.kind) {
    case GpNode::Kind::ann_root: {
      if (!is_root) return false;
      if (node.children.size() != cfg.num_outputs) return false;
      break;
    }
    case GpNode::Kind::n_neuron: {
      const int n = node.index;
      if (n < 1 || n > static_cast<int>(cfg.max_inputs_per_neuron))
        return false;
      if (node.children.size() != static_cast<std::size_t>(2 * n))
        return false;
      for (int i = 0; i < n; ++i)
        if (node.children[i].type() != NodeType::neuron) return false;
      for (int i = n; i < 2 * n; ++i)
        if (node.children[i].type() != NodeType::real) return false;
      break;
    }
    case GpNode::Kind::input_neuron: {
      if (!node.children.empty()) return false;
      if (node.index < 0 || node.index >= static_cast<int>(cfg.num_inputs))
        return false;
      break;
    }
    case GpNode::Kind::real_constant: {
      if (!node.children.empty()) return false;
      if (!std::isfinite(node.value)) return false;
      if (std::abs(node.value) > cfg.constant_range) return false;
      break;
    }
    case GpNode::Kind::pop: {
      if (!node.children.empty()) return false;
      break;
    }
    case GpNode::Kind::forward: {
      if (node.children.size() != 1) return false;
      if (node.children[0].type() != NodeType::neuron) return false;
      break;
    }
  }
  for (const GpNode& child : node.children)
    if (!node_valid(child, cfg, false)) return false;
  return true;
}

}  // namespace

bool is_type_valid(const GpTree& tree, const GrammarConfig& cfg) {
  if (tree.root.kind != GpNode::Kind::ann_root) return false;
  for (const GpNode& child : tree.root.children)
    if (child.type() != NodeType::neuron) return false;
  if (tree_height(tree.root) > cfg.max_height) return false;
  return node_valid(tree.root, cfg, true);
}

bool trees_equal(const GpNode& a, const GpNode& b, double tol) {
  if (a.kind != b.kind) return false;
  if (a.index != b.index) return false;
  if (a.kind == GpNode::Kind::real_constant && std::abs(a.value - b.value) > tol)
    return false;
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!trees_equal(a.children[i], b.children[i], tol)) return false;
  return true;
}

namespace {

template <typename Node, typename Out>
void collect_constants_impl(Node& node, Out& out) {
  if (node.kind == GpNode::Kind::real_constant) out.push_back(&node);
  for (auto& child : node.children) collect_constants_impl(child, out);
}

}  // namespace

std::vector<GpNode*> collect_constants(GpNode& root) {
  std::vector<GpNode*> out;
  collect_constants_impl(root, out);
  return out;
}

std::vector<const GpNode*> collect_constants(const GpNode& root) {
  std::vector<const GpNode*> out;
  collect_constants_impl(root, out);
  return out;
}

namespace {

GpNode make_constant(const GrammarConfig& cfg, Rng& rng) {
  GpNode node;
  node.kind = GpNode::Kind::real_constant;
  node.value = rng.uniform(-cfg.constant_range, cfg.constant_range);
  return node;
}

// Builds a neuron-typed subtree of height <= budget. `completed_neurons`
// tracks, in evaluation order, how many neurons are guaranteed to be on the
// reuse list at this point; a pop leaf is only offered once that is nonzero,
// so freshly created trees never contain a pop that would read an empty
// list (crossover and mutation may still move one there; the decoder's
// fallback covers that).
GpNode grow_neuron_subtree(const GrammarConfig& cfg, CreationMethod method,
                           std::size_t budget, std::size_t& completed_neurons,
                           Rng& rng) {
  const bool pop_allowed = completed_neurons > 0;
  const std::size_t terminal_count = cfg.num_inputs + (pop_allowed ? 1 : 0);
  const std::size_t function_count = cfg.max_inputs_per_neuron + 1;  // +forward

  std::size_t choice;
  if (budget <= 1) {
    choice = rng.index(terminal_count);  // terminals only
  } else if (method == CreationMethod::full) {
    choice = terminal_count + rng.index(function_count);  // functions only
  } else {
    choice = rng.index(terminal_count + function_count);
  }

  GpNode node;
  if (choice < terminal_count) {
    if (choice < cfg.num_inputs) {
      node.kind = GpNode::Kind::input_neuron;
      node.index = static_cast<int>(choice);
    } else {
      node.kind = GpNode::Kind::pop;
    }
    return node;
  }

  const std::size_t fn = choice - terminal_count;
  if (fn < cfg.max_inputs_per_neuron) {
    node.kind = GpNode::Kind::n_neuron;
    const int n = static_cast<int>(fn) + 1;
    node.index = n;
    node.children.reserve(static_cast<std::size_t>(2 * n));
    // Children are generated in evaluation order (input then its weight)
    // so `completed_neurons` is exact at every pop decision.
    for (int i = 0; i < n; ++i) {
      node.children.push_back(
          grow_neuron_subtree(cfg, method, budget - 1, completed_neurons, rng));
      node.children.push_back(make_constant(cfg, rng));
    }
    // Re-order to the grammar layout: n neuron children then n weights.
    std::vector<GpNode> ordered;
    ordered.reserve(node.children.size());
    for (int i = 0; i < n; ++i) ordered.push_back(std::move(node.children[2 * i]));
    for (int i = 0; i < n; ++i)
      ordered.push_back(std::move(node.children[2 * i + 1]));
    node.children = std::move(ordered);
    ++completed_neurons;
  } else {
    node.kind = GpNode::Kind::forward;
    node.children.push_back(
        grow_neuron_subtree(cfg, method, budget - 1, completed_neurons, rng));
  }
  return node;
}

}  // namespace

GpTree create_random_tree(const GrammarConfig& cfg, CreationMethod method,
                          std::size_t max_height, Rng& rng) {
  GpTree tree;
  tree.root.kind = GpNode::Kind::ann_root;
  tree.root.children.reserve(cfg.num_outputs);
  std::size_t completed_neurons = 0;
  for (std::size_t i = 0; i < cfg.num_outputs; ++i)
    tree.root.children.push_back(grow_neuron_subtree(
        cfg, method, max_height - 1, completed_neurons, rng));
  return tree;
}

std::vector<GpTree> ramped_half_and_half(const GrammarConfig& cfg,
                                         std::size_t population_size,
                                         Rng& rng) {
  const std::size_t ramp_levels = cfg.max_height - 1;  // heights 2..max_height
  std::vector<GpTree> population;
  population.reserve(population_size);
  for (std::size_t i = 0; i < population_size; ++i) {
    const std::size_t height = 2 + i % ramp_levels;
    const CreationMethod method =
        (i / ramp_levels) % 2 == 0 ? CreationMethod::full : CreationMethod::grow;
    population.push_back(create_random_tree(cfg, method, height, rng));
  }
  return population;
}

namespace {

template <typename Node>
void collect_non_root(Node& node, std::vector<Node*>& out, bool is_root) {
  if (!is_root) out.push_back(&node);
  for (auto& child : node.children) collect_non_root(child, out, false);
}

// Depth of each non-root node (root = depth 1), in the same order as
// collect_non_root.
void collect_depths(const GpNode& node, std::vector<std::size_t>& out,
                    std::size_t depth) {
  if (depth > 1) out.push_back(depth);
  for (const GpNode& child : node.children)
    collect_depths(child, out, depth + 1);
}

}  // namespace

std::pair<GpTree, GpTree> subtree_crossover(const GpTree& a, const GpTree& b,
                                            const GrammarConfig& cfg,
                                            Rng& rng) {
  GpTree child_a{a.root, std::nullopt, std::nullopt};
  GpTree child_b{b.root, std::nullopt, std::nullopt};

  std::vector<GpNode*> nodes_a, nodes_b;
  collect_non_root(child_a.root, nodes_a, true);
  collect_non_root(child_b.root, nodes_b, true);

  for (int attempt = 0; attempt < 10; ++attempt) {
    GpNode* point_a = nodes_a[rng.index(nodes_a.size())];
    const NodeType wanted = point_a->type();

    std::vector<GpNode*> candidates;
    candidates.reserve(nodes_b.size());
    for (GpNode* n : nodes_b)
      if (n->type() == wanted) candidates.push_back(n);
    if (candidates.empty()) continue;  // no compatible point; repick in a

    GpNode* point_b = candidates[rng.index(candidates.size())];
    std::swap(*point_a, *point_b);

    if (tree_height(child_a.root) > cfg.max_height)
      child_a.root = a.root;  // height guard: revert to the parent
    if (tree_height(child_b.root) > cfg.max_height)
      child_b.root = b.root;
    if (trees_equal(child_a.root, a.root, 0.0)) child_a.cached_fitness = a.cached_fitness;
    if (trees_equal(child_b.root, b.root, 0.0)) child_b.cached_fitness = b.cached_fitness;
    return {std::move(child_a), std::move(child_b)};
  }

  // Gave up finding a compatible pair: plain parent copies.
  child_a.cached_fitness = a.cached_fitness;
  child_b.cached_fitness = b.cached_fitness;
  return {std::move(child_a), std::move(child_b)};
}

GpTree mutate(const GpTree& tree, const GrammarConfig& cfg, Rng& rng) {
  GpTree result{tree.root, std::nullopt, std::nullopt};

  bool subtree_mutation = rng.chance(0.5);
  if (!subtree_mutation) {
    std::vector<GpNode*> constants = collect_constants(result.root);
    if (constants.empty()) {
      subtree_mutation = true;  // no constant to touch
    } else {
      constants[rng.index(constants.size())]->value =
          rng.uniform(-cfg.constant_range, cfg.constant_range);
      return result;
    }
  }

  std::vector<GpNode*> nodes;
  collect_non_root(result.root, nodes, true);
  std::vector<std::size_t> depths;
  collect_depths(result.root, depths, 1);

  const std::size_t pick = rng.index(nodes.size());
  GpNode* point = nodes[pick];
  // Size-fair replacement: the fresh subtree gets the replaced subtree's
  // height as its budget, so mutation does not drift tree sizes upward.
  const std::size_t allowed = cfg.max_height - depths[pick] + 1;
  const std::size_t budget = std::min(allowed, tree_height(*point));

  if (point->type() == NodeType::real) {
    *point = make_constant(cfg, rng);
  } else {
    std::size_t completed_neurons = 0;
    *point = grow_neuron_subtree(cfg, CreationMethod::grow, budget,
                                 completed_neurons, rng);
  }
  return result;
}

std::size_t tournament_select(std::span<const GpTree> population,
                              std::span<const double> fitness, std::size_t k,
                              Rng& rng) {
  if (population.empty()) throw EmptyPopulation("tournament on empty population");
  if (k < 1) k = 1;

  const std::size_t n = population.size();
  std::vector<std::size_t> draws;
  draws.reserve(k);
  if (k > n) {
    for (std::size_t i = 0; i < k; ++i) draws.push_back(rng.index(n));
  } else {
    // Without replacement via partial Fisher-Yates over an index pool.
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + rng.index(n - i);
      std::swap(pool[i], pool[j]);
      draws.push_back(pool[i]);
    }
  }

  std::size_t best = draws[0];
  std::size_t best_nodes = 0;
  bool best_nodes_known = false;
  for (std::size_t i = 1; i < draws.size(); ++i) {
    const std::size_t cand = draws[i];
    if (fitness[cand] < fitness[best]) {
      best = cand;
      best_nodes_known = false;
    } else if (fitness[cand] == fitness[best]) {
      if (!best_nodes_known) {
        best_nodes = node_count(population[best].root);
        best_nodes_known = true;
      }
      const std::size_t cand_nodes = node_count(population[cand].root);
      if (cand_nodes < best_nodes) {  // tie: fewer nodes wins, else draw order
        best = cand;
        best_nodes = cand_nodes;
      }
    }
  }
  return best;
}

}  // namespace evonet
