#include "evonet/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "evonet/errors.hpp"

namespace evonet {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void Network::finalize() {
  const std::size_t n = neurons.size();

  // topo_order may be absent (e.g. after JSON import); rebuild it with a
  // Kahn pass over created neurons, taking lowest ids first so the result
  // is deterministic.
  if (topo_order.size() != n) {
    topo_order.clear();
    std::vector<std::size_t> pending(n, 0);
    std::vector<std::vector<int>> dependents(n);
    for (std::size_t k = 0; k < n; ++k)
      for (const auto& [src, w] : neurons[k].incoming)
        if (!is_input(src)) {
          ++pending[k];
          dependents[src - static_cast<int>(input_count)].push_back(
              static_cast<int>(k));
        }
    std::vector<int> ready;
    for (std::size_t k = 0; k < n; ++k)
      if (pending[k] == 0) ready.push_back(static_cast<int>(k));
    while (!ready.empty()) {
      std::sort(ready.begin(), ready.end(), std::greater<int>());
      const int k = ready.back();
      ready.pop_back();
      topo_order.push_back(k);
      for (int dep : dependents[k])
        if (--pending[dep] == 0) ready.push_back(dep);
    }
    if (topo_order.size() != n) throw Error("network contains a cycle");
  }

  // Backwards reachability from the output slots.
  reachable.assign(n, 0);
  std::vector<int> stack;
  for (int slot : output_slots)
    if (!is_input(slot)) stack.push_back(slot - static_cast<int>(input_count));
  while (!stack.empty()) {
    const int k = stack.back();
    stack.pop_back();
    if (reachable[k]) continue;
    reachable[k] = 1;
    for (const auto& [src, w] : neurons[k].incoming)
      if (!is_input(src)) stack.push_back(src - static_cast<int>(input_count));
  }

  eval_order.clear();
  for (int k : topo_order)
    if (reachable[k]) eval_order.push_back(k);
}

std::vector<double> forward(const Network& net, std::span<const double> input) {
  if (input.size() != net.input_count)
    throw ShapeMismatch("forward: expected " + std::to_string(net.input_count) +
                        " inputs, got " + std::to_string(input.size()));

  std::vector<double> value(net.input_count + net.neurons.size(), 0.0);
  std::copy(input.begin(), input.end(), value.begin());

  for (int k : net.eval_order) {
    double sum = 0.0;
    for (const auto& [src, w] : net.neurons[k].incoming) sum += w * value[src];
    value[net.input_count + k] = logistic(sum);
  }

  std::vector<double> out;
  out.reserve(net.output_slots.size());
  for (int slot : net.output_slots) out.push_back(value[slot]);
  return out;
}

EvalMetrics evaluate(const Network& net, const Dataset& data,
                     EffortCounter* effort) {
  if (data.pattern_count() == 0) throw EmptyDataset("evaluate: no patterns");
  if (data.input_width != net.input_count)
    throw ShapeMismatch("evaluate: dataset has " +
                        std::to_string(data.input_width) +
                        " inputs, network expects " +
                        std::to_string(net.input_count));
  if (data.target_width != net.num_outputs())
    throw ShapeMismatch("evaluate: dataset has " +
                        std::to_string(data.target_width) +
                        " targets, network has " +
                        std::to_string(net.num_outputs()) + " outputs");

  const std::size_t patterns = data.pattern_count();
  const std::size_t width = data.target_width;

  double error_sum = 0.0;
  std::size_t hits = 0;
  std::vector<double> value(net.input_count + net.neurons.size(), 0.0);

  for (std::size_t p = 0; p < patterns; ++p) {
    const auto in = data.input_row(p);
    std::copy(in.begin(), in.end(), value.begin());
    for (int k : net.eval_order) {
      double sum = 0.0;
      for (const auto& [src, w] : net.neurons[k].incoming)
        sum += w * value[src];
      value[net.input_count + k] = logistic(sum);
    }

    const auto target = data.target_row(p);
    if (width == 1) {
      const double out = value[net.output_slots[0]];
      const double diff = out - target[0];
      error_sum += diff * diff;
      hits += ((out >= 0.5) == (target[0] >= 0.5)) ? 1 : 0;
    } else {
      std::size_t best_out = 0, best_target = 0;
      double max_out = -1.0, max_target = -1.0;
      for (std::size_t j = 0; j < width; ++j) {
        const double out = value[net.output_slots[j]];
        const double diff = out - target[j];
        error_sum += diff * diff;
        if (out > max_out) {
          max_out = out;
          best_out = j;
        }
        if (target[j] > max_target) {
          max_target = target[j];
          best_target = j;
        }
      }
      hits += (best_out == best_target) ? 1 : 0;
    }
  }

  if (effort) effort->increment();

  EvalMetrics metrics;
  metrics.pattern_count = patterns;
  metrics.mse = error_sum / (static_cast<double>(patterns) *
                             static_cast<double>(width));
  metrics.accuracy = static_cast<double>(hits) / static_cast<double>(patterns);
  return metrics;
}

std::size_t count_neurons(const Network& net) {
  return static_cast<std::size_t>(
      std::count(net.reachable.begin(), net.reachable.end(), 1));
}

std::vector<int> used_features(const Network& net) {
  std::vector<char> used(net.input_count, 0);
  for (int slot : net.output_slots)
    if (net.is_input(slot)) used[slot] = 1;
  for (std::size_t k = 0; k < net.neurons.size(); ++k) {
    if (!net.reachable[k]) continue;
    for (const auto& [src, w] : net.neurons[k].incoming)
      if (net.is_input(src)) used[src] = 1;
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < used.size(); ++i)
    if (used[i]) out.push_back(static_cast<int>(i));
  return out;
}

TopologyStats topology_stats(const Network& net) {
  TopologyStats stats;
  const std::size_t total = count_neurons(net);

  std::vector<char> on_output(net.neurons.size(), 0);
  for (int slot : net.output_slots)
    if (!net.is_input(slot)) on_output[slot - net.input_count] = 1;
  const std::size_t output_neurons = static_cast<std::size_t>(
      std::count(on_output.begin(), on_output.end(), 1));

  stats.hidden_neurons = total - output_neurons;
  for (std::size_t k = 0; k < net.neurons.size(); ++k)
    if (net.reachable[k]) stats.connections += net.neurons[k].incoming.size();
  stats.used_features = used_features(net).size();
  return stats;
}

std::string to_dot(const Network& net) {
  std::ostringstream os;
  os << "digraph network {\n  rankdir=LR;\n";
  for (std::size_t i = 0; i < net.input_count; ++i)
    os << "  in" << i << " [shape=box, label=\"in " << i << "\"];\n";
  for (std::size_t k = 0; k < net.neurons.size(); ++k)
    os << "  n" << k << " [shape=circle, label=\"n" << k << "\"];\n";
  for (std::size_t o = 0; o < net.output_slots.size(); ++o)
    os << "  out" << o << " [shape=plaintext, label=\"out " << o << "\"];\n";

  char weight[32];
  for (std::size_t k = 0; k < net.neurons.size(); ++k) {
    for (const auto& [src, w] : net.neurons[k].incoming) {
      std::snprintf(weight, sizeof weight, "%.6f", w);
      if (net.is_input(src))
        os << "  in" << src;
      else
        os << "  n" << (src - static_cast<int>(net.input_count));
      os << " -> n" << k << " [label=\"" << weight << "\"];\n";
    }
  }
  for (std::size_t o = 0; o < net.output_slots.size(); ++o) {
    const int slot = net.output_slots[o];
    if (net.is_input(slot))
      os << "  in" << slot;
    else
      os << "  n" << (slot - static_cast<int>(net.input_count));
    os << " -> out" << o << ";\n";
  }
  os << "}\n";
  return os.str();
}

std::string to_json(const Network& net) {
  nlohmann::ordered_json doc;
  doc["input_count"] = net.input_count;
  doc["neurons"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < net.neurons.size(); ++k) {
    nlohmann::ordered_json entry;
    entry["id"] = net.input_count + k;
    entry["incoming"] = nlohmann::ordered_json::array();
    for (const auto& [src, w] : net.neurons[k].incoming)
      entry["incoming"].push_back({src, w});
    doc["neurons"].push_back(std::move(entry));
  }
  doc["output_slots"] = net.output_slots;
  return doc.dump(2) + "\n";
}

Network network_from_json(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  Network net;
  net.input_count = doc.at("input_count").get<std::size_t>();
  for (const auto& entry : doc.at("neurons")) {
    const auto id = entry.at("id").get<std::size_t>();
    if (id != net.input_count + net.neurons.size())
      throw Error("network json: neuron ids must be dense and in order");
    Network::Neuron neuron;
    for (const auto& edge : entry.at("incoming"))
      neuron.incoming.emplace_back(edge.at(0).get<int>(),
                                   edge.at(1).get<double>());
    net.neurons.push_back(std::move(neuron));
  }
  net.output_slots = doc.at("output_slots").get<std::vector<int>>();
  net.finalize();
  return net;
}

}  // namespace evonet
