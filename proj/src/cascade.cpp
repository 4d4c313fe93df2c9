#include "casgcn/cascade.hpp"

#include "casgcn/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace casgcn {

namespace {

std::string quoted(const NodeId& id) { return "\"" + id + "\""; }

}  // namespace

int CascadeGraph::node_index(const NodeId& id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

ValidationReport validate_cascade(const CascadeGraph& graph) {
  ValidationReport report;
  auto flag = [&report](const std::string& message) { report.violations.push_back(message); };

  if (graph.nodes.empty()) flag("no nodes");
  if (!(graph.window_t > 0.0)) flag("window_t must be positive");

  std::unordered_map<NodeId, double> time_of;
  time_of.reserve(graph.nodes.size());
  std::vector<NodeId> origins;
  for (const auto& node : graph.nodes) {
    if (node.id.empty()) flag("empty node id");
    if (!time_of.emplace(node.id, node.time).second) {
      flag("duplicate node id: " + quoted(node.id));
    }
    if (node.time == 0.0) origins.push_back(node.id);
    if (node.time < 0.0 || node.time > graph.window_t) {
      std::ostringstream os;
      os << "node time out of window: " << quoted(node.id) << " at " << node.time;
      flag(os.str());
    }
  }
  if (!graph.nodes.empty()) {
    if (origins.empty()) {
      flag("no origin (no node at time 0)");
    } else if (origins.size() > 1) {
      std::string msg = "multiple origins:";
      for (const auto& id : origins) msg += " " + quoted(id);
      flag(msg);
    }
  }

  std::unordered_set<std::string> seen_edges;
  seen_edges.reserve(graph.edges.size());
  for (const auto& [src, dst] : graph.edges) {
    auto src_it = time_of.find(src);
    auto dst_it = time_of.find(dst);
    if (src_it == time_of.end()) flag("edge endpoint not a node: " + quoted(src));
    if (dst_it == time_of.end()) flag("edge endpoint not a node: " + quoted(dst));
    if (src == dst) flag("self-loop at " + quoted(src));
    if (!seen_edges.insert(src + "\x1f" + dst).second) {
      flag("duplicate edge: (" + quoted(src) + ", " + quoted(dst) + ")");
    }
    if (src_it != time_of.end() && dst_it != time_of.end() &&
        src_it->second > dst_it->second) {
      std::ostringstream os;
      os << "edge against time order: (" << quoted(src) << " at " << src_it->second << " -> "
         << quoted(dst) << " at " << dst_it->second << ")";
      flag(os.str());
    }
  }
  return report;
}

AdjacencyPair build_adjacency(const CascadeGraph& graph) {
  auto report = validate_cascade(graph);
  if (!report.ok()) {
    throw std::invalid_argument("build_adjacency: invalid cascade \"" + graph.cascade_id +
                                "\": " + report.violations.front());
  }

  const auto n = graph.node_count();
  AdjacencyPair adj;
  adj.a_in = Matrix::Zero(n, n);
  adj.a_out = Matrix::Zero(n, n);
  adj.node_order.reserve(graph.nodes.size());

  std::unordered_map<NodeId, int> index;
  index.reserve(graph.nodes.size());
  for (const auto& node : graph.nodes) {
    index.emplace(node.id, static_cast<int>(adj.node_order.size()));
    adj.node_order.push_back(node.id);
  }
  for (const auto& [src, dst] : graph.edges) {
    const int u = index.at(src);
    const int v = index.at(dst);
    adj.a_in(v, u) = 1.0;
    adj.a_out(u, v) = 1.0;
  }
  return adj;
}

GrowthLabel growth_label(const std::vector<double>& event_times, double t, double delta_t) {
  if (!(t > 0.0)) throw std::invalid_argument("growth_label: t must be positive");
  if (!(delta_t > 0.0)) throw std::invalid_argument("growth_label: delta_t must be positive");
  std::int64_t count = 0;
  for (double time : event_times) {
    if (time > t && time <= t + delta_t) ++count;
  }
  return GrowthLabel{count};
}

std::vector<LabeledCascade> filter_by_size(const std::vector<LabeledCascade>& cascades,
                                           std::int64_t min_nodes) {
  if (min_nodes < 0) throw std::invalid_argument("filter_by_size: min_nodes must be >= 0");
  std::vector<LabeledCascade> kept;
  kept.reserve(cascades.size());
  for (const auto& cascade : cascades) {
    if (cascade.graph.node_count() > min_nodes) kept.push_back(cascade);
  }
  return kept;
}

DatasetSplit split_dataset(std::vector<LabeledCascade> cascades, const SplitRatios& ratios,
                           std::uint64_t seed) {
  if (!(ratios.train > 0.0 && ratios.val > 0.0 && ratios.test > 0.0)) {
    throw std::invalid_argument("split_dataset: ratios must be positive");
  }
  const double sum = ratios.train + ratios.val + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split_dataset: ratios must sum to 1 (got " +
                                std::to_string(sum) + ")");
  }

  rng::Engine engine(seed);
  engine.shuffle(cascades);

  const auto n = static_cast<std::int64_t>(cascades.size());
  auto n_train = static_cast<std::int64_t>(std::llround(ratios.train * static_cast<double>(n)));
  n_train = std::clamp<std::int64_t>(n_train, 0, n);
  auto n_val = static_cast<std::int64_t>(std::llround(ratios.val * static_cast<double>(n)));
  n_val = std::clamp<std::int64_t>(n_val, 0, n - n_train);

  DatasetSplit split;
  split.train.assign(cascades.begin(), cascades.begin() + n_train);
  split.val.assign(cascades.begin() + n_train, cascades.begin() + n_train + n_val);
  split.test.assign(cascades.begin() + n_train + n_val, cascades.end());
  return split;
}

}  // namespace casgcn
