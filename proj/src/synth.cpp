#include "casgcn/synth.hpp"

#include "casgcn/rng.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>
#include <string>

namespace casgcn::synth {

namespace {

constexpr double kInfluenceClip = 10.0;

struct Arrival {
  double time{};
  std::int64_t seq{};       // insertion order, breaks time ties
  std::int64_t parent{-1};  // index into the accepted-node list
  double parent_influence{1.0};

  bool operator>(const Arrival& other) const {
    if (time != other.time) return time > other.time;
    return seq > other.seq;
  }
};

}  // namespace

void validate(const GenConfig& config) {
  if (config.base_rate < 0.0) throw std::invalid_argument("synth: base_rate must be >= 0");
  if (!(config.influence_shape > 0.0)) {
    throw std::invalid_argument("synth: influence_shape must be > 0");
  }
  if (!(config.decay > 0.0)) throw std::invalid_argument("synth: decay must be > 0");
  if (!(config.window_t > 0.0)) throw std::invalid_argument("synth: window_t must be > 0");
  if (!(config.delta_t > 0.0)) throw std::invalid_argument("synth: delta_t must be > 0");
  if (config.direction_signal < 0.0 || config.direction_signal > 1.0) {
    throw std::invalid_argument("synth: direction_signal must be in [0,1]");
  }
  if (config.time_signal < 0.0 || config.time_signal > 1.0) {
    throw std::invalid_argument("synth: time_signal must be in [0,1]");
  }
  if (config.max_nodes < 1) throw std::invalid_argument("synth: max_nodes must be >= 1");
}

LabeledCascade generate_cascade(const GenConfig& config, std::uint64_t seed) {
  validate(config);
  rng::Engine engine(seed);
  const double horizon = config.window_t + config.delta_t;

  struct SimNode {
    double time{};
    std::int64_t parent{-1};
  };
  std::vector<SimNode> accepted;
  accepted.reserve(static_cast<std::size_t>(std::min<std::int64_t>(config.max_nodes, 4096)));

  std::priority_queue<Arrival, std::vector<Arrival>, std::greater<Arrival>> pending;
  std::int64_t next_seq = 0;
  pending.push(Arrival{0.0, next_seq++, -1, 1.0});

  while (!pending.empty() &&
         static_cast<std::int64_t>(accepted.size()) < config.max_nodes) {
    const Arrival arrival = pending.top();
    pending.pop();

    const auto index = static_cast<std::int64_t>(accepted.size());
    accepted.push_back({arrival.time, arrival.parent});

    const double own_draw = std::min(engine.pareto(config.influence_shape), kInfluenceClip);
    const double influence =
        arrival.parent < 0
            ? own_draw
            : (1.0 - config.direction_signal) * own_draw +
                  config.direction_signal * arrival.parent_influence;
    const double time_factor = 1.0 - config.time_signal * (arrival.time / horizon);
    const double rate = config.base_rate * influence * time_factor;

    const std::int64_t children = engine.poisson(rate);
    for (std::int64_t c = 0; c < children; ++c) {
      const double child_time = arrival.time + engine.exponential(config.decay);
      if (child_time > horizon) continue;
      pending.push(Arrival{child_time, next_seq++, index, influence});
    }
  }

  LabeledCascade cascade;
  CascadeGraph& graph = cascade.graph;
  graph.cascade_id = "s" + std::to_string(seed);
  graph.window_t = config.window_t;

  // Chronological processing means observed nodes form a prefix.
  std::int64_t growth = 0;
  for (std::size_t i = 0; i < accepted.size(); ++i) {
    if (accepted[i].time <= config.window_t) {
      graph.nodes.push_back({"n" + std::to_string(i), accepted[i].time});
      if (accepted[i].parent >= 0) {
        graph.edges.emplace_back("n" + std::to_string(accepted[i].parent),
                                 "n" + std::to_string(i));
      }
    } else {
      ++growth;
    }
  }
  cascade.label = GrowthLabel{growth};
  return cascade;
}

std::vector<LabeledCascade> generate_dataset(const GenConfig& config, std::int64_t n,
                                             std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("synth: dataset size must be >= 0");
  std::vector<LabeledCascade> cascades;
  cascades.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    auto cascade =
        generate_cascade(config, rng::derive_seed(seed, static_cast<std::uint64_t>(i)));
    cascade.graph.cascade_id = "c" + std::to_string(i);
    cascades.push_back(std::move(cascade));
  }
  return cascades;
}

}  // namespace casgcn::synth
