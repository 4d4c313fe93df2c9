// Temporal branching-process generator for labeled synthetic cascades.
//
// The root arrives at time 0. Each arriving node draws a Pareto influence
// multiplier, blended with its parent's influence by direction_signal (so
// fertility runs in lineages that only the edge orientation reveals) and
// damped by time_signal as arrival time approaches the simulation horizon
// (so early adopters matter more). The node then spawns
// Poisson(base_rate * influence) children with exponential inter-arrival
// delays. Arrivals are processed in chronological order; max_nodes caps the
// total. The observed graph keeps nodes up to window_t; the label counts
// arrivals in (window_t, window_t + delta_t].
#pragma once

#include "casgcn/cascade.hpp"

#include <cstdint>
#include <vector>

namespace casgcn::synth {

struct GenConfig {
  double base_rate{1.0};        // expected children per unit influence
  double influence_shape{2.5};  // Pareto tail exponent, minimum 1, clip at 10
  double decay{1.0 / 600.0};    // child delay rate, per second
  double window_t{3600.0};
  double delta_t{3600.0};
  double direction_signal{0.5};  // 0 = iid influence, 1 = inherit parent's
  double time_signal{0.5};       // 0 = no time effect, 1 = rate hits 0 at horizon
  std::int64_t max_nodes{500};
};

// Throws std::invalid_argument when a field is out of range.
void validate(const GenConfig& config);

// Deterministic under (config, seed); cascade_id is "s<seed>".
LabeledCascade generate_cascade(const GenConfig& config, std::uint64_t seed);

// n independent cascades with per-index seeds derived from `seed`
// (rng::derive_seed); cascade_id is "c<index>".
std::vector<LabeledCascade> generate_dataset(const GenConfig& config, std::int64_t n,
                                             std::uint64_t seed);

}  // namespace casgcn::synth
