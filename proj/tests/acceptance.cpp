// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavier than the unit tests; expect a few minutes.
#include "casgcn/baselines.hpp"
#include "casgcn/cascade.hpp"
#include "casgcn/ingest.hpp"
#include "casgcn/model.hpp"
#include "casgcn/rng.hpp"
#include "casgcn/synth.hpp"
#include "casgcn/tape.hpp"
#include "casgcn/train.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

using namespace casgcn;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<LabeledCascade> random_cascades(int count, std::uint64_t seed,
                                            std::int64_t max_nodes, double base_rate = 1.1) {
  synth::GenConfig gen;
  gen.base_rate = base_rate;
  gen.max_nodes = max_nodes;
  gen.window_t = 1800.0;
  gen.delta_t = 1800.0;
  std::vector<LabeledCascade> cascades;
  for (int i = 0; i < count; ++i) {
    cascades.push_back(
        synth::generate_cascade(gen, rng::derive_seed(seed, static_cast<std::uint64_t>(i))));
  }
  return cascades;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// ---------------------------------------------------------------------------

bool gradient_correctness(std::string& detail) {
  const auto start = Clock::now();

  // a random cascade with exactly five observed nodes
  synth::GenConfig gen;
  gen.base_rate = 1.2;
  gen.max_nodes = 40;
  LabeledCascade cascade;
  for (std::uint64_t seed = 0;; ++seed) {
    cascade = synth::generate_cascade(gen, seed);
    if (cascade.graph.node_count() == 5) break;
  }

  model::ModelConfig config;
  config.embed_dim = 3;
  config.iterations = 2;
  config.readout_dim = 2;
  config.mlp_hidden = {2};
  config.vocab_size = 16;
  auto vocab = model::Vocab::build({cascade}, config.vocab_size);
  auto params = model::init_params(config, vocab, 11);

  const double target = std::log1p(static_cast<double>(cascade.label->delta_s));
  const auto loss_fn = [&](ad::Tape& tape, const std::vector<ad::Var>& vars) {
    auto mv = model::resolve_vars(params.store, ad::BoundParams{vars});
    ad::Var y = model::forward_from_vars(tape, mv, params.vocab, config, cascade.graph);
    ad::Var diff = tape.sub(y, tape.leaf(Matrix::Constant(1, 1, target)));
    return tape.mul(diff, diff);
  };
  const double err = ad::grad_check(loss_fn, params.store, 1e-5);
  const double elapsed = seconds_since(start);

  std::ostringstream os;
  os << "max relative error " << err << ", " << elapsed << " s";
  detail = os.str();
  return err < 1e-4 && elapsed < 60.0;
}

bool oracle_equivalence(std::string& detail) {
  const auto cascades = random_cascades(24, 1001, 12);
  model::ModelConfig config;
  config.embed_dim = 3;
  config.iterations = 2;
  config.readout_dim = 3;
  config.mlp_hidden = {3};
  config.vocab_size = 128;
  auto vocab = model::Vocab::build(cascades, config.vocab_size);
  auto params = model::init_params(config, vocab, 21);

  double worst_conv = 0.0, worst_attn = 0.0, worst_predict = 0.0;
  for (const auto& cascade : cascades) {
    const auto adjacency = build_adjacency(cascade.graph);
    const Matrix h0 = model::embed_nodes_values(params, cascade.graph.nodes);

    const Matrix conv = model::conv_step_values(h0, adjacency, params, config);
    const auto conv_ref =
        oracles::ref_conv_step(oracles::to_grid(h0), oracles::to_grid(adjacency.a_in),
                               oracles::to_grid(adjacency.a_out),
                               oracles::gate_params(params.store));
    for (Eigen::Index r = 0; r < conv.rows(); ++r) {
      for (Eigen::Index c = 0; c < conv.cols(); ++c) {
        worst_conv = std::max(
            worst_conv,
            std::abs(conv(r, c) -
                     conv_ref[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]));
      }
    }

    const Matrix times = model::temporal_vector(cascade.graph);
    const Vector attn = model::attention_readout_values(conv, times, params, config);
    std::vector<double> plain_times;
    for (Eigen::Index v = 0; v < times.rows(); ++v) plain_times.push_back(times(v, 0));
    const auto attn_ref = oracles::ref_attention(
        oracles::to_grid(conv), plain_times, oracles::to_grid(params.store.at("attn_gate_w")),
        oracles::to_grid(params.store.at("attn_gate_b"))[0],
        oracles::to_grid(params.store.at("attn_value_w")),
        oracles::to_grid(params.store.at("attn_value_b"))[0]);
    for (Eigen::Index e = 0; e < attn.size(); ++e) {
      worst_attn = std::max(
          worst_attn, std::abs(attn(e) - attn_ref[static_cast<std::size_t>(e)]));
    }

    worst_predict = std::max(worst_predict,
                             std::abs(model::predict_log(params, config, cascade.graph) -
                                      oracles::ref_predict(params, config, cascade.graph)));
  }

  std::ostringstream os;
  os << "max abs diff: conv " << worst_conv << ", attention " << worst_attn << ", predict "
     << worst_predict << " over " << cascades.size() << " cascades";
  detail = os.str();
  return worst_conv < 1e-9 && worst_attn < 1e-9 && worst_predict < 1e-9;
}

bool permutation_invariance(std::string& detail) {
  const auto cascades = random_cascades(100, 2002, 16);
  model::ModelConfig config;
  config.embed_dim = 4;
  config.iterations = 2;
  config.readout_dim = 4;
  config.mlp_hidden = {4};
  config.vocab_size = 256;
  auto vocab = model::Vocab::build(cascades, config.vocab_size);
  auto params = model::init_params(config, vocab, 31);

  rng::Engine engine(404);
  double worst = 0.0;
  for (const auto& cascade : cascades) {
    const double base = model::predict_log(params, config, cascade.graph);
    CascadeGraph shuffled = cascade.graph;
    engine.shuffle(shuffled.nodes);
    worst = std::max(worst, std::abs(base - model::predict_log(params, config, shuffled)));
  }
  std::ostringstream os;
  os << "max prediction shift " << worst << " over 100 cascades";
  detail = os.str();
  return worst < 1e-9;
}

bool receptive_field_locality(std::string& detail) {
  CascadeGraph graph;
  graph.cascade_id = "chain4";
  graph.window_t = 100.0;
  graph.nodes = {{"r", 0.0}, {"a", 10.0}, {"b", 20.0}, {"c", 30.0}};
  graph.edges = {{"r", "a"}, {"a", "b"}, {"b", "c"}};
  const auto adjacency = build_adjacency(graph);

  model::ModelConfig config;
  config.embed_dim = 4;
  config.iterations = 1;
  config.readout_dim = 4;
  config.vocab_size = 8;
  auto vocab = model::Vocab::build({LabeledCascade{graph, GrowthLabel{0}}}, 8);
  auto params = model::init_params(config, vocab, 41);

  auto one_round = [&](const model::ModelParams& p) {
    return model::conv_step_values(model::embed_nodes_values(p, graph.nodes), adjacency, p,
                                   config);
  };
  const Matrix before = one_round(params);

  // perturb r (distance 2 from b, 3 from c) and c's state observers
  model::ModelParams poked = params;
  poked.store.at("embedding").row(*poked.vocab.index("r")).array() += 3.21;
  const Matrix after = one_round(poked);

  const double direct = (after.row(1) - before.row(1)).cwiseAbs().maxCoeff();
  const bool far_zero = after.row(2) == before.row(2) && after.row(3) == before.row(3);
  std::ostringstream os;
  os << "distance>=2 rows byte-identical: " << (far_zero ? "yes" : "no")
     << "; distance-1 row moved by " << direct;
  detail = os.str();
  return far_zero && direct > 0.0;
}

bool variant_contracts(std::string& detail) {
  CascadeGraph forward;
  forward.cascade_id = "fwd";
  forward.window_t = 100.0;
  forward.nodes = {{"r", 0.0}, {"a", 50.0}, {"b", 50.0}};
  forward.edges = {{"r", "a"}, {"a", "b"}};
  CascadeGraph flipped = forward;
  flipped.edges = {{"r", "a"}, {"b", "a"}};

  auto vocab = model::Vocab::build({LabeledCascade{forward, GrowthLabel{0}}}, 8);

  model::ModelConfig full;
  full.embed_dim = 4;
  full.iterations = 2;
  full.readout_dim = 4;
  full.vocab_size = 8;
  full.variant = model::Variant::full;
  auto full_params = model::init_params(full, vocab, 51);
  const double full_gap = std::abs(model::predict_log(full_params, full, forward) -
                                   model::predict_log(full_params, full, flipped));

  model::ModelConfig undirected = full;
  undirected.variant = model::Variant::undirected;
  auto undirected_params = model::init_params(undirected, vocab, 51);
  const double undirected_gap =
      std::abs(model::predict_log(undirected_params, undirected, forward) -
               model::predict_log(undirected_params, undirected, flipped));

  // no_time: exact invariance under arbitrary time changes
  model::ModelConfig no_time = full;
  no_time.variant = model::Variant::no_time;
  const auto cascades = random_cascades(10, 3003, 10);
  auto nt_vocab = model::Vocab::build(cascades, 64);
  auto nt_params = model::init_params(no_time, nt_vocab, 61);
  bool time_blind = true;
  rng::Engine engine(7);
  for (const auto& cascade : cascades) {
    const double base = model::predict_log(nt_params, no_time, cascade.graph);
    CascadeGraph warped = cascade.graph;
    const double shared = engine.uniform(1.0, warped.window_t);
    for (auto& node : warped.nodes) {
      if (node.time > 0.0) node.time = shared;
    }
    if (model::predict_log(nt_params, no_time, warped) != base) time_blind = false;
  }

  std::ostringstream os;
  os << "orientation gap: full " << full_gap << ", undirected " << undirected_gap
     << "; no_time exactly time-blind: " << (time_blind ? "yes" : "no");
  detail = os.str();
  return full_gap > 1e-6 && undirected_gap < 1e-12 && time_blind;
}

bool overfit_check(std::string& detail) {
  const auto start = Clock::now();
  // multi-node cascades only: single-node graphs are identical inputs with
  // different labels, so no model could memorize them
  synth::GenConfig gen;
  gen.base_rate = 1.5;
  gen.max_nodes = 60;
  gen.window_t = 1800.0;
  gen.delta_t = 1800.0;
  auto cascades = filter_by_size(synth::generate_dataset(gen, 600, 4004), 2);
  cascades.resize(32);
  DatasetSplit split;
  split.train = cascades;
  split.val = cascades;  // early-stopping bookkeeping tracks the training set
  split.test = cascades;

  model::ModelConfig config;
  config.embed_dim = 8;
  config.iterations = 2;
  config.readout_dim = 8;
  config.mlp_hidden = {16};
  config.vocab_size = 128;
  auto vocab = model::Vocab::build(split.train, config.vocab_size);

  train::TrainConfig tc;
  tc.learning_rate = 3e-3;
  tc.epochs = 600;  // crosses the threshold near epoch 130
  tc.patience = 600;
  tc.batch_size = 8;
  tc.seed = 77;

  auto run = [&]() {
    auto params = model::init_params(config, vocab, 71);
    auto result = train::train_casgcn(std::move(params), split, config, tc);
    return result;
  };
  const auto first = run();

  double best = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  for (const auto& record : first.history) {
    if (record.val_msle < best) {
      best = record.val_msle;
      best_epoch = record.epoch;
    }
    if (best < 0.01) break;
  }
  const bool reached = best < 0.01;

  // seed determinism: an identical rerun of the first 40 epochs
  train::TrainConfig short_tc = tc;
  short_tc.epochs = 40;
  short_tc.patience = 40;
  auto a = train::train_casgcn(model::init_params(config, vocab, 71), split, config, short_tc);
  auto b = train::train_casgcn(model::init_params(config, vocab, 71), split, config, short_tc);
  bool deterministic = a.history.size() == b.history.size();
  if (deterministic) {
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      if (a.history[i].train_loss != b.history[i].train_loss ||
          a.history[i].val_msle != b.history[i].val_msle) {
        deterministic = false;
        break;
      }
    }
  }

  const double elapsed = seconds_since(start);
  std::ostringstream os;
  os << "train msle " << best << " reached by epoch " << best_epoch << ", deterministic: "
     << (deterministic ? "yes" : "no") << ", " << elapsed << " s";
  detail = os.str();
  return reached && deterministic && elapsed < 600.0;
}

struct BenchmarkRun {
  double msle{};
};

bool benchmark_ordering(std::string& detail) {
  synth::GenConfig gen;
  gen.base_rate = 0.8;
  gen.influence_shape = 3.0;
  gen.decay = 1.0 / 450.0;
  gen.window_t = 3600.0;
  gen.delta_t = 3600.0;
  gen.direction_signal = 0.5;
  gen.time_signal = 0.5;
  gen.max_nodes = 100;

  // non-trivial cascades only (> 3 observed nodes), 2000/400/400 split
  auto kept = filter_by_size(synth::generate_dataset(gen, 9000, 97), 3);
  if (kept.size() < 2800) {
    detail = "generator produced too few cascades above the size floor";
    return false;
  }
  kept.resize(2800);
  DatasetSplit split = split_dataset(std::move(kept), {5.0 / 7, 1.0 / 7, 1.0 / 7}, 17);

  model::ModelConfig base_config;
  base_config.embed_dim = 8;
  base_config.iterations = 2;
  base_config.readout_dim = 8;
  base_config.mlp_hidden = {8};
  base_config.vocab_size = 512;

  train::TrainConfig tc;
  tc.learning_rate = 5e-3;
  tc.epochs = 60;
  tc.patience = 12;
  tc.batch_size = 32;

  const Matrix features = baselines::feature_matrix(split.train);
  const Vector targets = baselines::log_growth_targets(split.train);

  auto casgcn_msle = [&](model::Variant variant, std::uint64_t seed) {
    model::ModelConfig config = base_config;
    config.variant = variant;
    auto vocab = model::Vocab::build(split.train, config.vocab_size);
    auto params = model::init_params(config, vocab, rng::derive_seed(seed, 2));
    train::TrainConfig seeded = tc;
    seeded.seed = rng::derive_seed(seed, 3);
    auto result = train::train_casgcn(std::move(params), split, config, seeded);
    return train::evaluate_casgcn(result.params, config, split.test).msle;
  };

  auto baseline_test_msle = [&](auto&& predict) {
    std::vector<double> predicted, actual;
    for (const auto& cascade : split.test) {
      predicted.push_back(model::growth_from_log(
          predict(baselines::extract_features(cascade.graph))));
      actual.push_back(static_cast<double>(cascade.label->delta_s));
    }
    return train::msle(predicted, actual).msle;
  };

  std::vector<double> full_runs, undirected_runs, no_time_runs, deep_runs, linear_runs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    full_runs.push_back(casgcn_msle(model::Variant::full, seed));
    undirected_runs.push_back(casgcn_msle(model::Variant::undirected, seed));
    no_time_runs.push_back(casgcn_msle(model::Variant::no_time, seed));

    baselines::DeepFitOptions options;
    options.hidden = {16};
    options.learning_rate = 1e-2;
    options.epochs = 200;
    options.batch_size = 64;
    options.seed = rng::derive_seed(seed, 2);
    auto deep = baselines::fit_deep(features, targets, options);
    deep_runs.push_back(baseline_test_msle([&](const baselines::HandFeatures& f) {
      return baselines::predict_baseline(deep.model, f);
    }));

    auto linear = baselines::fit_linear(features, targets, 1e-6);
    linear_runs.push_back(baseline_test_msle([&](const baselines::HandFeatures& f) {
      return baselines::predict_baseline(linear, f);
    }));
  }

  const double casgcn_m = median(full_runs);
  const double undirected_m = median(undirected_runs);
  const double no_time_m = median(no_time_runs);
  const double deep_m = median(deep_runs);
  const double linear_m = median(linear_runs);

  std::ostringstream os;
  os << "median test msle: CasGCN " << casgcn_m << ", Feature-deep " << deep_m
     << ", Feature-linear " << linear_m << ", undirected " << undirected_m << ", no_time "
     << no_time_m;
  detail = os.str();
  return casgcn_m <= deep_m && deep_m <= linear_m && casgcn_m <= undirected_m &&
         casgcn_m <= no_time_m;
}

bool metric_oracle(std::string& detail) {
  rng::Engine engine(8080);
  std::vector<double> predicted, actual;
  for (int i = 0; i < 1000; ++i) {
    predicted.push_back(engine.uniform(0, 5000));
    actual.push_back(engine.uniform(0, 5000));
  }
  const double library = train::msle(predicted, actual).msle;
  const double reference = oracles::ref_msle(predicted, actual);
  const double gap = std::abs(library - reference);

  const double e = std::exp(1.0);
  const double fp0 = train::msle({4.0, 9.0}, {4.0, 9.0}).msle;
  const double fp1 = std::abs(train::msle({0.0}, {e - 1.0}).msle - 1.0);
  const double fp4 = std::abs(train::msle({e * e - 1.0}, {0.0}).msle - 4.0);

  std::ostringstream os;
  os << "oracle gap " << gap << "; fixed points 0/" << fp1 << "/" << fp4;
  detail = os.str();
  return gap < 1e-12 && fp0 == 0.0 && fp1 < 1e-12 && fp4 < 1e-12;
}

bool data_pipeline(std::string& detail) {
  // chain golden 1: direct retweet
  const auto direct = io::parse_weibo_cascade("origin", 0.0, {{"C", 100.0, {}}}, 10800.0);
  const bool golden1 =
      direct.graph.nodes.size() == 2 &&
      std::set<Edge>(direct.graph.edges.begin(), direct.graph.edges.end()) ==
          std::set<Edge>{{"origin", "C"}};

  // chain golden 2: two-hop chain
  const auto chained =
      io::parse_weibo_cascade("origin", 0.0, {{"C", 200.0, {"B", "A"}}}, 10800.0);
  const bool golden2 =
      std::set<Edge>(chained.graph.edges.begin(), chained.graph.edges.end()) ==
      std::set<Edge>{{"origin", "A"}, {"A", "B"}, {"B", "C"}};

  // citation golden: the three-paper construction
  std::vector<io::CitationRecord> corpus = {
      {"A", 1990, {}}, {"B", 1992, {"A"}}, {"C", 1993, {"A", "B"}}};
  const auto citation = io::build_citation_cascade("A", corpus, 5, 15);
  const bool golden3 =
      std::set<Edge>(citation.graph.edges.begin(), citation.graph.edges.end()) ==
          std::set<Edge>{{"A", "B"}, {"A", "C"}, {"B", "C"}} &&
      citation.label->delta_s == 0;

  // interchange round trip on 1000 generated cascades
  synth::GenConfig gen;
  gen.base_rate = 1.1;
  gen.max_nodes = 60;
  const auto dataset = synth::generate_dataset(gen, 1000, 3);
  std::ostringstream buffer;
  io::write_cascades(dataset, buffer);
  std::istringstream reread(buffer.str());
  const bool round_trip = io::read_cascades(reread, "acceptance") == dataset;

  std::ostringstream os;
  os << "weibo goldens " << (golden1 && golden2 ? "ok" : "FAILED") << ", citation golden "
     << (golden3 ? "ok" : "FAILED") << ", 1000-cascade round trip "
     << (round_trip ? "ok" : "FAILED");
  detail = os.str();
  return golden1 && golden2 && golden3 && round_trip;
}

bool threshold_filtering(std::string& detail) {
  synth::GenConfig gen;
  gen.base_rate = 1.3;
  gen.max_nodes = 250;
  const auto corpus = synth::generate_dataset(gen, 400, 55);
  const auto w1 = filter_by_size(corpus, 30);
  const auto w2 = filter_by_size(corpus, 60);
  const auto w3 = filter_by_size(corpus, 90);

  auto ids = [](const std::vector<LabeledCascade>& cascades) {
    std::set<std::string> out;
    for (const auto& cascade : cascades) out.insert(cascade.graph.cascade_id);
    return out;
  };
  const auto i1 = ids(w1), i2 = ids(w2), i3 = ids(w3);
  const bool nested = std::includes(i1.begin(), i1.end(), i2.begin(), i2.end()) &&
                      std::includes(i2.begin(), i2.end(), i3.begin(), i3.end());

  std::ostringstream os;
  os << "sizes " << w1.size() << " >= " << w2.size() << " >= " << w3.size()
     << ", nested: " << (nested ? "yes" : "no");
  detail = os.str();
  return w1.size() >= w2.size() && w2.size() >= w3.size() && nested && !w3.empty();
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", gradient_correctness},
      {2, "oracle equivalence", oracle_equivalence},
      {3, "permutation invariance", permutation_invariance},
      {4, "receptive-field locality", receptive_field_locality},
      {5, "variant contracts", variant_contracts},
      {6, "overfit check", overfit_check},
      {7, "benchmark ordering", benchmark_ordering},
      {8, "metric oracle", metric_oracle},
      {9, "data pipeline", data_pipeline},
      {10, "threshold filtering", threshold_filtering},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    std::string description;
    bool passed = false;
    try {
      passed = criterion.run(description);
    } catch (const std::exception& e) {
      description = std::string("exception: ") + e.what();
    }
    if (!passed) ++failures;
    std::cout << (passed ? "[PASS] " : "[FAIL] ") << criterion.id << " " << criterion.name
              << ": " << description << "\n"
              << std::flush;
  }
  if (failures > 0) {
    std::cout << failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
