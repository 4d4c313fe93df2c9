// Cascade data model: time-stamped directed diffusion graphs, growth labels,
// adjacency construction, size filtering and dataset splitting.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace casgcn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Opaque node identifier (user handle, paper key, generated id).
using NodeId = std::string;

struct TimedNode {
  NodeId id;
  double time{};  // seconds since the originating post
  bool operator==(const TimedNode&) const = default;
};

using Edge = std::pair<NodeId, NodeId>;  // src adopted first, dst adopted from src

// A cascade observed for `window_t` seconds after its origination.
//
// Invariants (checked by validate_cascade):
//   - exactly one node at time 0 (the origin)
//   - 0 <= t_v <= window_t for every node
//   - edges reference listed nodes, respect time order (t_src <= t_dst),
//     and contain no self-loops or duplicates
struct CascadeGraph {
  std::string cascade_id;
  std::vector<TimedNode> nodes;  // order fixes adjacency row/column indices
  std::vector<Edge> edges;
  double window_t{};

  bool operator==(const CascadeGraph&) const = default;

  std::int64_t node_count() const { return static_cast<std::int64_t>(nodes.size()); }
  int node_index(const NodeId& id) const;  // -1 when absent
};

struct GrowthLabel {
  std::int64_t delta_s{};  // adopters arriving in (t, t + delta_t]
  bool operator==(const GrowthLabel&) const = default;
};

struct LabeledCascade {
  CascadeGraph graph;
  std::optional<GrowthLabel> label;
  bool operator==(const LabeledCascade&) const = default;
};

// Dense directed adjacency in both orientations over a fixed node order.
// a_in(v, u) = 1 iff edge (u, v) exists; a_out = a_in transposed.
struct AdjacencyPair {
  Matrix a_in;
  Matrix a_out;
  std::vector<NodeId> node_order;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

struct DatasetSplit {
  std::vector<LabeledCascade> train;
  std::vector<LabeledCascade> val;
  std::vector<LabeledCascade> test;
};

struct SplitRatios {
  double train{};
  double val{};
  double test{};
};

// Checks every CascadeGraph invariant; violations name the offending
// node or edge. Violations are data, not exceptions.
ValidationReport validate_cascade(const CascadeGraph& graph);

// Builds the in/out adjacency pair. Throws std::invalid_argument naming the
// first violation if the graph does not validate.
AdjacencyPair build_adjacency(const CascadeGraph& graph);

// Number of events in (t, t + delta_t]. An event exactly at t counts as
// observed; exactly at t + delta_t counts as growth.
GrowthLabel growth_label(const std::vector<double>& event_times, double t, double delta_t);

// Keeps cascades with strictly more than min_nodes observed nodes.
std::vector<LabeledCascade> filter_by_size(const std::vector<LabeledCascade>& cascades,
                                           std::int64_t min_nodes);

// Deterministic seeded shuffle, then a ratio-rounded partition. Ratios must
// be positive and sum to 1 within 1e-9.
DatasetSplit split_dataset(std::vector<LabeledCascade> cascades, const SplitRatios& ratios,
                           std::uint64_t seed);

}  // namespace casgcn
