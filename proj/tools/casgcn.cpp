// casgcn: command-line driver for dataset generation, ingestion, training,
// evaluation, ablation and model comparison. Every run resolves its
// configuration (file plus flag overrides), writes the merge to
// <out_dir>/manifest.json, and produces name-addressed artifacts so re-runs
// from the manifest reproduce outputs.
#include "casgcn/baselines.hpp"
#include "casgcn/cascade.hpp"
#include "casgcn/checkpoint.hpp"
#include "casgcn/ingest.hpp"
#include "casgcn/model.hpp"
#include "casgcn/rng.hpp"
#include "casgcn/run_config.hpp"
#include "casgcn/synth.hpp"
#include "casgcn/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

using namespace casgcn;

namespace fs = std::filesystem;

// Sub-seed roles derived from the run seed.
constexpr std::uint64_t kSplitRole = 1;
constexpr std::uint64_t kInitRole = 2;
constexpr std::uint64_t kShuffleRole = 3;

std::string fixed4(double value) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << value;
  return os.str();
}

fs::path prepare_out_dir(const cli::RunConfig& config) {
  fs::path out(config.out_dir);
  fs::create_directories(out);
  return out;
}

void write_manifest(const cli::RunConfig& config, const fs::path& out) {
  std::ofstream file(out / "manifest.json", std::ios::binary);
  if (!file) throw std::runtime_error("cannot write manifest in " + out.string());
  file << cli::to_json(config).dump(2) << "\n";
}

SplitRatios normalized_ratios(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw cli::ConfigError("data.split weights must be positive");
    total += w;
  }
  return SplitRatios{weights[0] / total, weights[1] / total, weights[2] / total};
}

DatasetSplit load_split(const cli::RunConfig& config) {
  const auto& data = config.data;
  if (!data.train.empty()) {
    if (data.val.empty() || data.test.empty()) {
      throw cli::ConfigError("data.train/val/test must be given together");
    }
    DatasetSplit split;
    split.train = io::read_cascades(data.train);
    split.val = io::read_cascades(data.val);
    split.test = io::read_cascades(data.test);
    return split;
  }
  if (data.dataset.empty()) {
    throw cli::ConfigError("data.dataset (or data.train/val/test) is required");
  }
  auto cascades = io::read_cascades(data.dataset);
  if (data.min_nodes > 0) cascades = filter_by_size(cascades, data.min_nodes);
  return split_dataset(std::move(cascades), normalized_ratios(data.split_weights),
                       rng::derive_seed(config.seed, kSplitRole));
}

std::string casgcn_kind(model::Variant variant) {
  return "casgcn-" + model::variant_to_string(variant);
}

void write_eval_report(const fs::path& path, const train::EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "msle\t" << ad::format_double(report.msle) << "\n";
  out << "n\t" << report.n << "\n";
  for (double sle : report.per_cascade_sle) {
    out << "sle\t" << ad::format_double(sle) << "\n";
  }
}

int run_synth(const cli::RunConfig& config) {
  const auto out = prepare_out_dir(config);
  write_manifest(config, out);

  auto dataset = synth::generate_dataset(config.synth.gen, config.synth.count, config.seed);
  if (config.synth.min_nodes > 0) dataset = filter_by_size(dataset, config.synth.min_nodes);
  io::write_cascades(dataset, (out / "dataset.jsonl").string());
  std::cout << "wrote " << dataset.size() << " cascades to " << (out / "dataset.jsonl").string()
            << "\n";
  return 0;
}

int run_ingest_weibo(const cli::RunConfig& config) {
  if (config.weibo.sources.empty()) throw cli::ConfigError("weibo.sources is required");
  const auto out = prepare_out_dir(config);
  write_manifest(config, out);

  std::vector<LabeledCascade> cascades;
  std::size_t note_count = 0;
  for (const auto& source_path : config.weibo.sources) {
    auto source = io::read_weibo_source(source_path);
    std::vector<std::string> notes;
    auto cascade = io::parse_weibo_labeled(source.origin_author, 0.0, source.records,
                                           config.weibo.t, config.weibo.delta_t, &notes);
    for (const auto& note : notes) {
      std::cerr << "note: " << source_path << ": " << note << "\n";
    }
    note_count += notes.size();
    for (const auto& existing : cascades) {
      if (existing.graph.cascade_id == cascade.graph.cascade_id) {
        throw std::invalid_argument("duplicate cascade id across sources: " +
                                    cascade.graph.cascade_id);
      }
    }
    cascades.push_back(std::move(cascade));
  }
  io::write_cascades(cascades, (out / "dataset.jsonl").string());
  std::cout << "wrote " << cascades.size() << " cascades (" << note_count
            << " duplicate retweets dropped) to " << (out / "dataset.jsonl").string() << "\n";
  return 0;
}

int run_ingest_citations(const cli::RunConfig& config) {
  if (config.citations.source.empty()) throw cli::ConfigError("citations.source is required");
  const auto out = prepare_out_dir(config);
  write_manifest(config, out);

  auto corpus = io::read_citation_source(config.citations.source);
  std::vector<NodeId> targets = config.citations.targets;
  if (targets.empty()) {
    if (config.citations.max_year < config.citations.min_year) {
      throw cli::ConfigError("citations: set targets or a min_year/max_year range");
    }
    for (const auto& record : corpus) {
      if (record.year >= config.citations.min_year && record.year <= config.citations.max_year) {
        targets.push_back(record.paper);
      }
    }
  }

  std::vector<LabeledCascade> cascades;
  cascades.reserve(targets.size());
  for (const auto& target : targets) {
    cascades.push_back(io::build_citation_cascade(target, corpus, config.citations.t_years,
                                                  config.citations.delta_t_years));
  }
  io::write_cascades(cascades, (out / "dataset.jsonl").string());
  std::cout << "wrote " << cascades.size() << " cascades to " << (out / "dataset.jsonl").string()
            << "\n";
  return 0;
}

int run_train(const cli::RunConfig& config) {
  const auto out = prepare_out_dir(config);
  write_manifest(config, out);
  DatasetSplit split = load_split(config);
  if (split.train.empty()) throw std::invalid_argument("train: empty training split");

  const auto& kind = config.model.kind;
  if (kind == "casgcn") {
    auto vocab = model::Vocab::build(split.train, config.model.config.vocab_size);
    auto params =
        model::init_params(config.model.config, vocab, rng::derive_seed(config.seed, kInitRole));
    train::TrainConfig tc = config.train.config;
    tc.seed = rng::derive_seed(config.seed, kShuffleRole);

    auto result = train::train_casgcn(std::move(params), split, config.model.config, tc);
    ad::write_checkpoint((out / "checkpoint.ckpt").string(),
                         casgcn_kind(config.model.config.variant), result.params.store);
    result.params.vocab.write((out / "vocab.tsv").string());
    train::write_history_tsv((out / "history.tsv").string(), result.history);

    const auto test = split.test.empty()
                          ? train::EvalReport{0.0, {}, 0}
                          : train::evaluate_casgcn(result.params, config.model.config,
                                                   split.test, tc.target_space);
    write_eval_report(out / "eval.tsv", test);
    std::cout << "best epoch " << result.best_epoch << " val msle "
              << fixed4(result.best_val_msle) << " test msle " << fixed4(test.msle) << "\n";
    return 0;
  }

  const Matrix features = baselines::feature_matrix(split.train);
  const Vector targets = baselines::log_growth_targets(split.train);
  auto eval_with = [&](auto&& predict) {
    std::vector<double> predicted, actual;
    for (const auto& cascade : split.test) {
      predicted.push_back(model::growth_from_log(
          predict(baselines::extract_features(cascade.graph))));
      actual.push_back(static_cast<double>(cascade.label ? cascade.label->delta_s : 0));
    }
    return split.test.empty() ? train::EvalReport{0.0, {}, 0} : train::msle(predicted, actual);
  };

  if (kind == "feature-linear") {
    auto linear = baselines::fit_linear(features, targets, config.train.ridge_lambda);
    baselines::write_linear_checkpoint((out / "checkpoint.ckpt").string(), linear);
    const auto test = eval_with(
        [&](const baselines::HandFeatures& f) { return baselines::predict_baseline(linear, f); });
    write_eval_report(out / "eval.tsv", test);
    std::cout << "feature-linear test msle " << fixed4(test.msle) << "\n";
    return 0;
  }
  if (kind == "feature-deep") {
    baselines::DeepFitOptions options;
    options.hidden = config.train.deep_hidden;
    options.learning_rate = config.train.config.learning_rate;
    options.epochs = config.train.config.epochs;
    options.batch_size = config.train.config.batch_size;
    options.seed = rng::derive_seed(config.seed, kInitRole);
    auto fit = baselines::fit_deep(features, targets, options);
    baselines::write_deep_checkpoint((out / "checkpoint.ckpt").string(), fit.model);

    std::vector<train::EpochRecord> history;
    for (std::size_t epoch = 0; epoch < fit.epoch_loss.size(); ++epoch) {
      history.push_back({static_cast<int>(epoch), fit.epoch_loss[epoch],
                         std::numeric_limits<double>::quiet_NaN()});
    }
    train::write_history_tsv((out / "history.tsv").string(), history);
    const auto test = eval_with([&](const baselines::HandFeatures& f) {
      return baselines::predict_baseline(fit.model, f);
    });
    write_eval_report(out / "eval.tsv", test);
    std::cout << "feature-deep test msle " << fixed4(test.msle) << "\n";
    return 0;
  }
  throw cli::ConfigError("unknown model.kind: " + kind);
}

int run_evaluate(const cli::RunConfig& config) {
  if (config.evaluate.checkpoint.empty()) {
    throw cli::ConfigError("evaluate.checkpoint is required");
  }
  if (config.data.dataset.empty()) throw cli::ConfigError("data.dataset is required");
  const auto out = prepare_out_dir(config);
  write_manifest(config, out);

  auto cascades = io::read_cascades(config.data.dataset);
  if (config.data.min_nodes > 0) cascades = filter_by_size(cascades, config.data.min_nodes);
  auto ckpt = ad::read_checkpoint(config.evaluate.checkpoint);

  train::EvalReport report;
  if (ckpt.kind.rfind("casgcn-", 0) == 0) {
    const std::string expected = casgcn_kind(config.model.config.variant);
    if (ckpt.kind != expected) {
      throw std::invalid_argument("checkpoint kind " + ckpt.kind +
                                  " does not match configured variant (" + expected + ")");
    }
    if (config.evaluate.vocab.empty()) {
      throw cli::ConfigError("evaluate.vocab is required for casgcn checkpoints");
    }
    model::ModelParams params;
    params.store = std::move(ckpt.params);
    params.vocab = model::Vocab::read(config.evaluate.vocab);
    report = train::evaluate_casgcn(params, config.model.config, cascades,
                                    config.train.config.target_space);
  } else if (ckpt.kind == "feature-linear" || ckpt.kind == "feature-deep") {
    std::vector<double> predicted, actual;
    if (ckpt.kind == "feature-linear") {
      auto linear = baselines::read_linear_checkpoint(config.evaluate.checkpoint);
      for (const auto& cascade : cascades) {
        predicted.push_back(model::growth_from_log(
            baselines::predict_baseline(linear, baselines::extract_features(cascade.graph))));
        actual.push_back(static_cast<double>(cascade.label ? cascade.label->delta_s : 0));
      }
    } else {
      auto deep = baselines::read_deep_checkpoint(config.evaluate.checkpoint);
      for (const auto& cascade : cascades) {
        predicted.push_back(model::growth_from_log(
            baselines::predict_baseline(deep, baselines::extract_features(cascade.graph))));
        actual.push_back(static_cast<double>(cascade.label ? cascade.label->delta_s : 0));
      }
    }
    report = train::msle(predicted, actual);
  } else {
    throw std::invalid_argument("unknown checkpoint kind: " + ckpt.kind);
  }

  write_eval_report(out / "eval.tsv", report);
  std::cout << "msle " << ad::format_double(report.msle) << " (n=" << report.n << ")\n";
  return 0;
}

int run_ablate(const cli::RunConfig& config) {
  const auto out = prepare_out_dir(config);
  write_manifest(config, out);
  DatasetSplit split = load_split(config);
  if (split.train.empty() || split.val.empty() || split.test.empty()) {
    throw std::invalid_argument("ablate: train/val/test splits must all be non-empty");
  }

  auto vocab = model::Vocab::build(split.train, config.model.config.vocab_size);
  train::TrainConfig tc = config.train.config;
  tc.seed = rng::derive_seed(config.seed, kShuffleRole);

  std::ofstream table(out / "ablation.tsv", std::ios::binary);
  if (!table) throw std::runtime_error("cannot write ablation table");
  table << "variant\tval_msle\ttest_msle\n";
  for (model::Variant variant : model::all_variants()) {
    model::ModelConfig mc = config.model.config;
    mc.variant = variant;
    auto params = model::init_params(mc, vocab, rng::derive_seed(config.seed, kInitRole));
    auto result = train::train_casgcn(std::move(params), split, mc, tc);
    const auto test = train::evaluate_casgcn(result.params, mc, split.test, tc.target_space);
    table << model::variant_display_name(variant) << "\t" << fixed4(result.best_val_msle)
          << "\t" << fixed4(test.msle) << "\n";
    std::cout << model::variant_display_name(variant) << "\tval " << fixed4(result.best_val_msle)
              << "\ttest " << fixed4(test.msle) << "\n";
  }
  return 0;
}

struct ModelRun {
  double test_msle{};
  std::vector<double> test_sle;
};

ModelRun median_run(std::vector<ModelRun> runs) {
  std::sort(runs.begin(), runs.end(),
            [](const ModelRun& a, const ModelRun& b) { return a.test_msle < b.test_msle; });
  return runs[(runs.size() - 1) / 2];  // lower median; pairs with a concrete run
}

int run_compare(const cli::RunConfig& config) {
  if (config.compare.datasets.empty()) {
    throw cli::ConfigError("compare.datasets is required");
  }
  if (config.compare.seeds.empty()) throw cli::ConfigError("compare.seeds must be non-empty");
  const auto out = prepare_out_dir(config);
  write_manifest(config, out);

  const std::vector<std::string> row_labels = {"Feature-linear", "Feature-Deep",
                                               "CasGCN (Proposed)"};
  std::vector<std::vector<std::string>> cells(row_labels.size());

  for (const auto& dataset : config.compare.datasets) {
    auto cascades = io::read_cascades(dataset.path);
    if (config.data.min_nodes > 0) cascades = filter_by_size(cascades, config.data.min_nodes);
    DatasetSplit split =
        split_dataset(std::move(cascades), normalized_ratios(config.data.split_weights),
                      rng::derive_seed(config.seed, kSplitRole));
    if (split.train.empty() || split.test.empty()) {
      throw std::invalid_argument("compare: dataset " + dataset.name + " splits are empty");
    }

    const Matrix features = baselines::feature_matrix(split.train);
    const Vector targets = baselines::log_growth_targets(split.train);
    auto test_eval = [&](auto&& predict) {
      std::vector<double> predicted, actual;
      for (const auto& cascade : split.test) {
        predicted.push_back(model::growth_from_log(
            predict(baselines::extract_features(cascade.graph))));
        actual.push_back(static_cast<double>(cascade.label ? cascade.label->delta_s : 0));
      }
      return train::msle(predicted, actual);
    };

    std::vector<ModelRun> linear_runs, deep_runs, casgcn_runs;
    for (std::uint64_t seed : config.compare.seeds) {
      // Linear fits are seed-free; repeated entries keep the median pairing simple.
      auto linear = baselines::fit_linear(features, targets, config.train.ridge_lambda);
      auto linear_report = test_eval([&](const baselines::HandFeatures& f) {
        return baselines::predict_baseline(linear, f);
      });
      linear_runs.push_back({linear_report.msle, linear_report.per_cascade_sle});

      baselines::DeepFitOptions options;
      options.hidden = config.train.deep_hidden;
      options.learning_rate = config.train.config.learning_rate;
      options.epochs = config.train.config.epochs;
      options.batch_size = config.train.config.batch_size;
      options.seed = rng::derive_seed(seed, kInitRole);
      auto deep = baselines::fit_deep(features, targets, options);
      auto deep_report = test_eval([&](const baselines::HandFeatures& f) {
        return baselines::predict_baseline(deep.model, f);
      });
      deep_runs.push_back({deep_report.msle, deep_report.per_cascade_sle});

      auto vocab = model::Vocab::build(split.train, config.model.config.vocab_size);
      auto params =
          model::init_params(config.model.config, vocab, rng::derive_seed(seed, kInitRole));
      train::TrainConfig tc = config.train.config;
      tc.seed = rng::derive_seed(seed, kShuffleRole);
      auto result = train::train_casgcn(std::move(params), split, config.model.config, tc);
      auto casgcn_report =
          train::evaluate_casgcn(result.params, config.model.config, split.test,
                                 tc.target_space);
      casgcn_runs.push_back({casgcn_report.msle, casgcn_report.per_cascade_sle});
    }

    const ModelRun linear_median = median_run(linear_runs);
    const ModelRun deep_median = median_run(deep_runs);
    const ModelRun casgcn_median = median_run(casgcn_runs);

    auto starred = [&](const ModelRun& run) {
      const double p = train::compare_significance(run.test_sle, casgcn_median.test_sle);
      return fixed4(run.test_msle) + train::significance_stars(p);
    };
    cells[0].push_back(starred(linear_median));
    cells[1].push_back(starred(deep_median));
    cells[2].push_back(fixed4(casgcn_median.test_msle));
  }

  std::ofstream table(out / "comparison.tsv", std::ios::binary);
  if (!table) throw std::runtime_error("cannot write comparison table");
  table << "model";
  for (const auto& dataset : config.compare.datasets) table << "\t" << dataset.name;
  table << "\n";
  for (std::size_t row = 0; row < row_labels.size(); ++row) {
    table << row_labels[row];
    for (const auto& cell : cells[row]) table << "\t" << cell;
    table << "\n";
  }
  std::cout << "wrote " << (out / "comparison.tsv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cascade growth prediction toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir_flag;
  std::int64_t seed_flag = -1;

  app.add_option("--config", config_path, "run configuration file (JSON)");
  app.add_option("--set", overrides, "override a config value, e.g. --set train.epochs=50");
  app.add_option("--out-dir", out_dir_flag, "override the output directory");
  app.add_option("--seed", seed_flag, "override the run seed");

  const std::vector<std::string> commands = {"synth",    "ingest-weibo", "ingest-citations",
                                             "train",    "evaluate",     "ablate",
                                             "compare"};
  for (const auto& name : commands) app.add_subcommand(name)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[usage]: " << e.what() << "\n";
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    nlohmann::ordered_json json = nlohmann::ordered_json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path, std::ios::binary);
      if (!in) throw cli::ConfigError("cannot open config file: " + config_path);
      try {
        in >> json;
      } catch (const std::exception& e) {
        throw cli::ConfigError("config file " + config_path + " is not valid JSON: " + e.what());
      }
    }
    for (const auto& assignment : overrides) cli::apply_override(json, assignment);
    if (!out_dir_flag.empty()) json["out_dir"] = out_dir_flag;
    if (seed_flag >= 0) json["seed"] = static_cast<std::uint64_t>(seed_flag);

    cli::RunConfig config = cli::parse_run_config(json);
    if (!config.command.empty() && config.command != command) {
      throw cli::ConfigError("config command \"" + config.command +
                             "\" does not match invoked command \"" + command + "\"");
    }
    config.command = command;

    if (command == "synth") return run_synth(config);
    if (command == "ingest-weibo") return run_ingest_weibo(config);
    if (command == "ingest-citations") return run_ingest_citations(config);
    if (command == "train") return run_train(config);
    if (command == "evaluate") return run_evaluate(config);
    if (command == "ablate") return run_ablate(config);
    if (command == "compare") return run_compare(config);
    std::cerr << "error[usage]: unknown command " << command << "\n";
    return 2;
  } catch (const cli::ConfigError& e) {
    std::cerr << "error[config]: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error[data]: " << e.what() << "\n";
    return 4;
  } catch (const std::out_of_range& e) {
    std::cerr << "error[data]: " << e.what() << "\n";
    return 4;
  } catch (const std::runtime_error& e) {
    std::cerr << "error[runtime]: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 5;
  }
}
