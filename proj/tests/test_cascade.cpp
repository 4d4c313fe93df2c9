#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "casgcn/cascade.hpp"
#include "casgcn/synth.hpp"

#include <algorithm>
#include <set>
#include <string>

using namespace casgcn;

namespace {

CascadeGraph chain_graph(int n, double window = 3600.0, double step = 100.0) {
  CascadeGraph graph;
  graph.cascade_id = "chain" + std::to_string(n);
  graph.window_t = window;
  for (int i = 0; i < n; ++i) {
    graph.nodes.push_back({"v" + std::to_string(i), i * step});
    if (i > 0) {
      graph.edges.emplace_back("v" + std::to_string(i - 1), "v" + std::to_string(i));
    }
  }
  return graph;
}

LabeledCascade sized_cascade(int n) {
  return LabeledCascade{chain_graph(n), GrowthLabel{0}};
}

bool has_violation(const ValidationReport& report, const std::string& needle) {
  return std::any_of(report.violations.begin(), report.violations.end(),
                     [&needle](const std::string& v) { return v.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("validate accepts the minimal legal cascade") {
  CascadeGraph graph;
  graph.cascade_id = "single";
  graph.window_t = 3600.0;
  graph.nodes.push_back({"root", 0.0});
  CHECK(validate_cascade(graph).ok());
}

TEST_CASE("validate flags each invariant violation by name") {
  CascadeGraph graph = chain_graph(3);

  SUBCASE("multiple origins") {
    graph.nodes[1].time = 0.0;
    CHECK(has_violation(validate_cascade(graph), "multiple origins"));
  }
  SUBCASE("no origin") {
    graph.nodes[0].time = 1.0;
    CHECK(has_violation(validate_cascade(graph), "no origin"));
  }
  SUBCASE("edge against time order") {
    graph.nodes[1].time = 250.0;  // v1 later than its child v2 at 200
    CHECK(has_violation(validate_cascade(graph), "edge against time order"));
  }
  SUBCASE("self loop") {
    graph.edges.emplace_back("v1", "v1");
    CHECK(has_violation(validate_cascade(graph), "self-loop"));
  }
  SUBCASE("duplicate edge") {
    graph.edges.emplace_back("v0", "v1");
    CHECK(has_violation(validate_cascade(graph), "duplicate edge"));
  }
  SUBCASE("unknown endpoint") {
    graph.edges.emplace_back("v0", "ghost");
    CHECK(has_violation(validate_cascade(graph), "not a node"));
  }
  SUBCASE("node out of window") {
    graph.nodes[2].time = 4000.0;
    CHECK(has_violation(validate_cascade(graph), "out of window"));
  }
  SUBCASE("duplicate node id") {
    graph.nodes.push_back({"v1", 300.0});
    CHECK(has_violation(validate_cascade(graph), "duplicate node id"));
  }
  SUBCASE("empty id") {
    graph.nodes.push_back({"", 300.0});
    CHECK(has_violation(validate_cascade(graph), "empty node id"));
  }
  SUBCASE("non-positive window") {
    graph.window_t = 0.0;
    CHECK_FALSE(validate_cascade(graph).ok());
  }
}

TEST_CASE("adjacency rows match the edge definition") {
  CascadeGraph graph;
  graph.cascade_id = "pair";
  graph.window_t = 100.0;
  graph.nodes = {{"r", 0.0}, {"a", 10.0}};
  graph.edges = {{"r", "a"}};

  const auto adj = build_adjacency(graph);
  CHECK(adj.a_out(0, 1) == 1.0);
  CHECK(adj.a_out.row(0).sum() == 1.0);
  CHECK(adj.a_in(1, 0) == 1.0);
  CHECK(adj.a_in.row(1).sum() == 1.0);
  CHECK(adj.node_order == std::vector<NodeId>{"r", "a"});
}

TEST_CASE("edgeless graph has all-zero adjacency") {
  CascadeGraph graph;
  graph.cascade_id = "loose";
  graph.window_t = 100.0;
  graph.nodes = {{"r", 0.0}, {"a", 10.0}, {"b", 20.0}};
  const auto adj = build_adjacency(graph);
  CHECK(adj.a_in.isZero(0.0));
  CHECK(adj.a_out.isZero(0.0));
}

TEST_CASE("chain adjacency rows, hand-enumerated") {
  const auto adj = build_adjacency(chain_graph(3));
  // a_in row of b picks out a; a_out row of a picks out b
  CHECK(adj.a_in(2, 0) == 0.0);
  CHECK(adj.a_in(2, 1) == 1.0);
  CHECK(adj.a_in(2, 2) == 0.0);
  CHECK(adj.a_out(1, 2) == 1.0);
  CHECK(adj.a_out(1, 0) == 0.0);
}

TEST_CASE("build_adjacency rejects invalid graphs with the first violation") {
  CascadeGraph graph = chain_graph(2);
  graph.nodes[1].time = -5.0;
  CHECK_THROWS_WITH_AS(build_adjacency(graph), doctest::Contains("invalid cascade"),
                       std::invalid_argument);
}

TEST_CASE("a_in is the transpose of a_out on generated cascades") {
  synth::GenConfig config;
  config.base_rate = 1.0;
  config.max_nodes = 60;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto cascade = synth::generate_cascade(config, seed);
    const auto adj = build_adjacency(cascade.graph);
    CHECK(adj.a_in == adj.a_out.transpose());
    CHECK(adj.a_in.diagonal().isZero(0.0));
  }
}

TEST_CASE("growth_label counts events in the half-open growth window") {
  CHECK(growth_label({0, 3600, 7200, 14400, 36000}, 10800, 75600).delta_s == 2);
  CHECK(growth_label({0}, 100, 100).delta_s == 0);
  // boundary: an event exactly at t is observed, exactly at t+delta_t grows
  CHECK(growth_label({0, 10800}, 10800, 3600).delta_s == 0);
  CHECK(growth_label({0, 14400}, 10800, 3600).delta_s == 1);
  CHECK_THROWS_AS(growth_label({0}, 0.0, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(growth_label({0}, 10.0, 0.0), std::invalid_argument);
}

TEST_CASE("growth_label is monotone in delta_t") {
  const std::vector<double> times = {0, 5, 100, 250, 900, 901, 2000};
  std::int64_t previous = 0;
  for (double delta = 10.0; delta <= 3000.0; delta += 10.0) {
    const auto label = growth_label(times, 50.0, delta);
    CHECK(label.delta_s >= previous);
    previous = label.delta_s;
  }
}

TEST_CASE("filter_by_size keeps strictly larger cascades, preserving order") {
  std::vector<LabeledCascade> cascades = {sized_cascade(31), sized_cascade(30),
                                          sized_cascade(90)};
  const auto kept = filter_by_size(cascades, 30);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].graph.node_count() == 31);
  CHECK(kept[1].graph.node_count() == 90);

  CHECK(filter_by_size(cascades, 0).size() == 3);
}

TEST_CASE("nested thresholds give monotone non-increasing corpora") {
  std::vector<LabeledCascade> corpus;
  for (int n = 1; n <= 120; n += 7) corpus.push_back(sized_cascade(n));
  const auto w1 = filter_by_size(corpus, 30);
  const auto w2 = filter_by_size(corpus, 60);
  const auto w3 = filter_by_size(corpus, 90);
  CHECK(w1.size() >= w2.size());
  CHECK(w2.size() >= w3.size());
  // subset relation by cascade id
  auto ids = [](const std::vector<LabeledCascade>& cs) {
    std::set<std::string> out;
    for (const auto& c : cs) out.insert(c.graph.cascade_id);
    return out;
  };
  const auto i1 = ids(w1), i2 = ids(w2), i3 = ids(w3);
  CHECK(std::includes(i1.begin(), i1.end(), i2.begin(), i2.end()));
  CHECK(std::includes(i2.begin(), i2.end(), i3.begin(), i3.end()));
}

TEST_CASE("split_dataset matches the ratio-rounded sizes") {
  std::vector<LabeledCascade> cascades;
  for (int i = 0; i < 7; ++i) {
    auto cascade = sized_cascade(2);
    cascade.graph.cascade_id = "c" + std::to_string(i);
    cascades.push_back(std::move(cascade));
  }
  const auto split = split_dataset(cascades, {5.0 / 7, 1.0 / 7, 1.0 / 7}, 0);
  CHECK(split.train.size() == 5);
  CHECK(split.val.size() == 1);
  CHECK(split.test.size() == 1);
}

TEST_CASE("split_dataset handles the empty corpus") {
  const auto split = split_dataset({}, {0.5, 0.25, 0.25}, 9);
  CHECK(split.train.empty());
  CHECK(split.val.empty());
  CHECK(split.test.empty());
}

TEST_CASE("split_dataset is deterministic and partitions the input") {
  std::vector<LabeledCascade> cascades;
  for (int i = 0; i < 53; ++i) {
    auto cascade = sized_cascade(1 + i % 4);
    cascade.graph.cascade_id = "c" + std::to_string(i);
    cascades.push_back(std::move(cascade));
  }
  const auto a = split_dataset(cascades, {0.5, 0.25, 0.25}, 42);
  const auto b = split_dataset(cascades, {0.5, 0.25, 0.25}, 42);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);

  std::set<std::string> all, seen;
  for (const auto& c : cascades) all.insert(c.graph.cascade_id);
  for (const auto* part : {&a.train, &a.val, &a.test}) {
    for (const auto& c : *part) {
      CHECK(seen.insert(c.graph.cascade_id).second);  // pairwise disjoint
    }
  }
  CHECK(seen == all);
}

TEST_CASE("split_dataset rejects bad ratios") {
  std::vector<LabeledCascade> cascades = {sized_cascade(2)};
  CHECK_THROWS_AS(split_dataset(cascades, {0.5, 0.25, 0.3}, 0), std::invalid_argument);
  CHECK_THROWS_AS(split_dataset(cascades, {1.0, -0.1, 0.1}, 0), std::invalid_argument);
}
