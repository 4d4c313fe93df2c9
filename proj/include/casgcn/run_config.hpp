// Run configuration: a strict JSON schema shared by every CLI command.
// Unknown keys are errors; flags override file values; the resolved merge is
// what lands in the run manifest.
#pragma once

#include "casgcn/model.hpp"
#include "casgcn/synth.hpp"
#include "casgcn/train.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace casgcn::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SynthSection {
  synth::GenConfig gen;
  std::int64_t count{1000};
  std::int64_t min_nodes{0};  // post-generation size filter, strict >
};

struct DataSection {
  std::string dataset;  // single interchange file, split by ratios below
  std::string train, val, test;  // explicit files win over `dataset`
  std::vector<double> split_weights{5.0, 1.0, 1.0};
  std::int64_t min_nodes{0};
};

struct ModelSection {
  std::string kind{"casgcn"};  // casgcn | feature-linear | feature-deep
  model::ModelConfig config;
};

struct TrainSection {
  train::TrainConfig config;
  double ridge_lambda{1e-6};      // feature-linear
  std::vector<int> deep_hidden{16};  // feature-deep
};

struct WeiboSection {
  std::vector<std::string> sources;
  double t{10800.0};        // 3 hours
  double delta_t{75600.0};  // 21 hours
};

struct CitationSection {
  std::string source;
  int t_years{5};
  int delta_t_years{15};
  std::vector<std::string> targets;  // explicit roots; empty = use year range
  int min_year{0};
  int max_year{0};
};

struct EvaluateSection {
  std::string checkpoint;
  std::string vocab;
};

struct CompareDataset {
  std::string name;
  std::string path;
};

struct CompareSection {
  std::vector<CompareDataset> datasets;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

struct RunConfig {
  std::string command;  // optional in files; must match the invoked command
  std::string out_dir{"run-out"};
  std::uint64_t seed{0};
  SynthSection synth;
  DataSection data;
  ModelSection model;
  TrainSection train;
  WeiboSection weibo;
  CitationSection citations;
  EvaluateSection evaluate;
  CompareSection compare;
};

// Throws ConfigError on unknown keys, wrong types, or out-of-range values.
RunConfig parse_run_config(const nlohmann::ordered_json& json);
RunConfig load_run_config(const std::string& path);

nlohmann::ordered_json to_json(const RunConfig& config);

// Applies a dotted-path override ("train.epochs=50"); the value parses as
// JSON when possible and falls back to a string.
void apply_override(nlohmann::ordered_json& json, const std::string& assignment);

}  // namespace casgcn::cli
