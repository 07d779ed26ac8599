#pragma once

#include <vector>

#include "evonet/grammar.hpp"
#include "evonet/network.hpp"

namespace evonet {

/// Where a connection weight came from: the constant node whose value is
/// added into edge `edge` of created neuron `neuron`. Several constants can
/// feed one edge (repeated inputs merge additively), and the map lets the
/// weight optimizer re-apply a chromosome without re-decoding.
struct WeightSource {
  std::size_t neuron;
  std::size_t edge;
  const GpNode* constant;
};

/// Turns a genotype into a network by interpreting the tree:
///  - the root creates the network, an empty reuse list and a cursor at 1;
///  - an n-input neuron node creates a neuron, wires each evaluated child
///    with its paired weight (adding onto an existing connection when the
///    same source repeats), and appends itself to the list after all its
///    children have been evaluated — which is what keeps the graph acyclic;
///  - a pop leaf returns the listed neuron at the cursor (clamped to the
///    list; input neuron 0 when the list is still empty);
///  - a forward node advances the cursor, then evaluates its child.
///
/// Pure function of the tree; neurons are numbered in creation order and
/// topo_order is their completion order.
Network decode(const GpTree& tree, const GrammarConfig& cfg);

/// decode() that also reports which constant feeds which edge.
Network decode_traced(const GpTree& tree, const GrammarConfig& cfg,
                      std::vector<WeightSource>* weight_sources);

}  // namespace evonet
