#include "evonet/decoder.hpp"

#include <algorithm>

#include "evonet/errors.hpp"

namespace evonet {

namespace {

// Walks the tree exactly as the grammar defines evaluation: neuron children
// and their paired weights in order, reuse list appended to after the
// children, cursor shared across the whole tree.
struct DecodeWalker {
  Network& net;
  std::vector<WeightSource>* trace;

  std::vector<int> list;   // completed created-neuron ids, completion order
  std::size_t cursor = 1;  // 1-based index into `list`

  // Returns the node id the subtree evaluates to.
  int eval_neuron(const GpNode& node) {
    switch (node.kind) {
      case GpNode::Kind::input_neuron:
        return node.index;

      case GpNode::Kind::pop: {
        if (list.empty()) return 0;  // before any neuron completed: input 0
        const std::size_t at = std::min(cursor, list.size());
        return list[at - 1];
      }

      case GpNode::Kind::forward: {
        ++cursor;
        return eval_neuron(node.children[0]);
      }

      case GpNode::Kind::n_neuron: {
        const std::size_t created = net.neurons.size();
        net.neurons.emplace_back();
        const int id = net.neuron_id(created);
        const int n = node.index;
        for (int i = 0; i < n; ++i) {
          const int source = eval_neuron(node.children[i]);
          const GpNode& weight_node = node.children[i + n];
          const double weight = weight_node.value;

          auto& incoming = net.neurons[created].incoming;
          auto existing = std::find_if(
              incoming.begin(), incoming.end(),
              [source](const auto& edge) { return edge.first == source; });
          std::size_t edge_index;
          if (existing != incoming.end()) {
            existing->second += weight;  // repeated input: weights add up
            edge_index = static_cast<std::size_t>(existing - incoming.begin());
          } else {
            incoming.emplace_back(source, weight);
            edge_index = incoming.size() - 1;
          }
          if (trace) trace->push_back({created, edge_index, &weight_node});
        }
        list.push_back(id);
        net.topo_order.push_back(static_cast<int>(created));
        return id;
      }

      default:
        throw Error("decode: real-typed node in a neuron position");
    }
  }
};

}  // namespace

Network decode_traced(const GpTree& tree, const GrammarConfig& cfg,
                      std::vector<WeightSource>* weight_sources) {
  Network net;
  net.input_count = cfg.num_inputs;

  DecodeWalker walker{net, weight_sources};
  net.output_slots.reserve(tree.root.children.size());
  for (const GpNode& child : tree.root.children)
    net.output_slots.push_back(walker.eval_neuron(child));

  net.finalize();
  return net;
}

Network decode(const GpTree& tree, const GrammarConfig& cfg) {
  return decode_traced(tree, cfg, nullptr);
}

}  // namespace evonet
