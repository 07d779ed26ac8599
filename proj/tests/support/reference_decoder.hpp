#pragma once

// Test-only reference model: a deliberately plain recursive interpreter of
// the tree-evaluation rules, written separately from the production decoder
// so the two can be compared on random trees. Keep this file free of any
// dependency on evonet/decoder.hpp.

#include <utility>
#include <vector>

#include "evonet/grammar.hpp"

namespace evonet::testing {

struct RefNetwork {
  int input_count = 0;
  struct Neuron {
    std::vector<std::pair<int, double>> incoming;  // (source id, weight)
  };
  std::vector<Neuron> neurons;  // creation order; id = input_count + index
  std::vector<int> outputs;     // node ids
};

RefNetwork reference_decode(const GpTree& tree, int num_inputs);

/// Kahn's algorithm; true when the digraph over created neurons is acyclic.
bool reference_is_acyclic(const RefNetwork& net);

/// Created neurons reachable backwards from the outputs.
std::size_t reference_reachable_count(const RefNetwork& net);

std::vector<int> reference_used_inputs(const RefNetwork& net);

}  // namespace evonet::testing
