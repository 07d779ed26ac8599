#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "evonet/rng.hpp"

namespace evonet {

/// Node types of the strongly typed grammar. A tree is well typed when the
/// root is the single `net`-typed node, every n-input neuron node has n
/// neuron children followed by n real children, and every real position
/// holds a floating point constant.
enum class NodeType { net, neuron, real };

struct GpNode {
  enum class Kind {
    ann_root,       // root; one child per network output (neuron type)
    n_neuron,       // neuron with n inputs; children: n neurons then n reals
    input_neuron,   // leaf; reads input variable `index`
    real_constant,  // leaf; connection weight
    pop,            // leaf; references the neuron at the reuse-list cursor
    forward         // advances the reuse-list cursor; one neuron child
  };

  Kind kind = Kind::real_constant;
  int index = 0;      // n_neuron: input count n; input_neuron: variable index
  double value = 0.0; // real_constant only
  std::vector<GpNode> children;

  NodeType type() const {
    switch (kind) {
      case Kind::ann_root: return NodeType::net;
      case Kind::real_constant: return NodeType::real;
      default: return NodeType::neuron;
    }
  }
  bool is_leaf() const { return children.empty(); }
};

/// Genotype: a typed tree plus evaluation caches. The caches travel with
/// the tree through copies; any structural or constant edit must reset them.
struct GpTree {
  GpNode root;
  std::optional<double> cached_fitness;
  std::optional<double> cached_validation_fitness;
};

struct GrammarConfig {
  std::size_t num_inputs = 0;
  std::size_t num_outputs = 0;
  std::size_t max_inputs_per_neuron = 5;
  std::size_t max_height = 6;
  double constant_range = 20.0;  // constants drawn uniformly from [-r, +r]

  void validate() const;  // throws ConfigError
};

enum class CreationMethod { grow, full };

/// Height of a subtree, counting a lone leaf as 1.
std::size_t tree_height(const GpNode& node);

std::size_t node_count(const GpNode& node);

/// Checks a tree against the grammar's type table: root arity and typing,
/// n-neuron child layout, leaf kinds, height bound, constant range.
bool is_type_valid(const GpTree& tree, const GrammarConfig& cfg);

/// Structural equality; constants compare equal within `tol`.
bool trees_equal(const GpNode& a, const GpNode& b, double tol = 1e-12);

/// Constants in depth-first preorder; the order defines the chromosome
/// layout used by the weight optimizer.
std::vector<GpNode*> collect_constants(GpNode& root);
std::vector<const GpNode*> collect_constants(const GpNode& root);

/// Builds one random type-valid tree. `full` extends every neuron-typed
/// branch to exactly `max_height`; `grow` picks uniformly over the node
/// set at each step. Pop leaves are only placed where at least one neuron
/// is guaranteed to have completed earlier in evaluation order.
GpTree create_random_tree(const GrammarConfig& cfg, CreationMethod method,
                          std::size_t max_height, Rng& rng);

/// Ramped half-and-half initialization: heights ramped over 2..max_height,
/// alternating grow and full at each ramp level.
std::vector<GpTree> ramped_half_and_half(const GrammarConfig& cfg,
                                         std::size_t population_size,
                                         Rng& rng);

/// Type-safe subtree exchange. Picks a non-root node in `a`, then a
/// same-typed non-root node in `b`; if `b` lacks the type, retries with a
/// new point up to 10 times before returning plain copies. An offspring
/// that would exceed max_height is replaced by a copy of its parent.
std::pair<GpTree, GpTree> subtree_crossover(const GpTree& a, const GpTree& b,
                                            const GrammarConfig& cfg,
                                            Rng& rng);

/// Mutation: 50% subtree replacement (fresh grow tree of the same type,
/// height-guarded), 50% re-draw of one constant; falls back to subtree
/// mutation when the tree has no constants.
GpTree mutate(const GpTree& tree, const GrammarConfig& cfg, Rng& rng);

/// k-tournament over (individual, fitness) pairs: draws k without
/// replacement (with replacement when k exceeds the population), returns
/// the index of the draw with minimal fitness; ties break toward fewer
/// tree nodes, then draw order. Throws EmptyPopulation.
std::size_t tournament_select(std::span<const GpTree> population,
                              std::span<const double> fitness, std::size_t k,
                              Rng& rng);

}  // namespace evonet
