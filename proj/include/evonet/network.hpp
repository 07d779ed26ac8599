#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evonet/data.hpp"

namespace evonet {

/// Counts training-set evaluations ("effort"). One increment per call to
/// evaluate(), which processes the whole pattern set once. Shared by the
/// GP loop and the weight-optimizer GAs of a run; safe to increment from
/// parallel fold threads that each own their counter.
class EffortCounter {
 public:
  std::uint64_t count() const { return count_.load(std::memory_order_relaxed); }
  void increment() { count_.fetch_add(1, std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> count_{0};
};

/// Phenotype: a feedforward network over an acyclic digraph.
///
/// Node ids: 0..input_count-1 are the input neurons; input_count + k is the
/// k-th created neuron (creation order). `topo_order` holds created-neuron
/// indices in an order where every neuron follows all of its sources; the
/// decoder's completion order satisfies this by construction.
struct Network {
  struct Neuron {
    std::vector<std::pair<int, double>> incoming;  // (source node id, weight)
  };

  std::size_t input_count = 0;
  std::vector<Neuron> neurons;
  std::vector<int> output_slots;   // node ids (neuron or raw input)
  std::vector<int> topo_order;     // created-neuron indices

  // Derived by finalize(): reachability from the output slots and the
  // restriction of topo_order to reachable neurons (what forward computes).
  std::vector<char> reachable;
  std::vector<int> eval_order;

  std::size_t num_outputs() const { return output_slots.size(); }
  int neuron_id(std::size_t k) const {
    return static_cast<int>(input_count + k);
  }
  bool is_input(int node_id) const {
    return node_id < static_cast<int>(input_count);
  }

  /// Recomputes reachability and the evaluation order. Must be called after
  /// construction or any structural change.
  void finalize();
};

struct EvalMetrics {
  double mse = 0.0;
  double accuracy = 0.0;
  std::size_t pattern_count = 0;
};

struct TopologyStats {
  std::size_t hidden_neurons = 0;
  std::size_t connections = 0;
  std::size_t used_features = 0;
};

/// One forward pass: neurons compute the logistic function of their weighted
/// input sum, input nodes pass their value through. Throws ShapeMismatch.
std::vector<double> forward(const Network& net,
                            std::span<const double> input);

/// MSE and accuracy over a pattern set; one effort increment per call when
/// a counter is supplied (training-set evaluations only — callers pass
/// nullptr for validation/test sets). Accuracy uses a 0.5 threshold for one
/// output and argmax for several. Throws ShapeMismatch, EmptyDataset.
EvalMetrics evaluate(const Network& net, const Dataset& data,
                     EffortCounter* effort = nullptr);

/// Created neurons reachable from the output slots (the N of the parsimony
/// penalty; unreachable neurons are not part of the evaluable network).
std::size_t count_neurons(const Network& net);

/// Input variables reachable backwards from the output slots, sorted.
std::vector<int> used_features(const Network& net);

/// Counts over the output-reachable subgraph. hidden_neurons excludes
/// neurons bound directly to an output slot.
TopologyStats topology_stats(const Network& net);

/// Graphviz DOT: inputs as boxes, neurons as circles, edges labeled with
/// weights at 6 decimals, one unlabeled marker per output slot.
std::string to_dot(const Network& net);

/// JSON document round-trippable by network_from_json; serialization is
/// byte-stable for a given network.
std::string to_json(const Network& net);
Network network_from_json(const std::string& text);

}  // namespace evonet
