#include "casgcn/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace casgcn::cli {

namespace {

using nlohmann::ordered_json;

void check_keys(const ordered_json& object, const std::string& section,
                const std::set<std::string>& allowed) {
  for (const auto& [key, _] : object.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key \"" + key + "\" in " + section);
    }
  }
}

template <class T>
T get_or(const ordered_json& object, const char* key, T fallback) {
  if (!object.contains(key)) return fallback;
  try {
    return object.at(key).get<T>();
  } catch (const std::exception&) {
    throw ConfigError(std::string("bad value for \"") + key + "\"");
  }
}

}  // namespace

RunConfig parse_run_config(const ordered_json& json) {
  if (!json.is_object()) throw ConfigError("configuration root must be an object");
  check_keys(json, "configuration root",
             {"command", "out_dir", "seed", "synth", "data", "model", "train", "weibo",
              "citations", "evaluate", "compare"});

  RunConfig config;
  config.command = get_or<std::string>(json, "command", "");
  config.out_dir = get_or<std::string>(json, "out_dir", config.out_dir);
  config.seed = get_or<std::uint64_t>(json, "seed", config.seed);

  if (json.contains("synth")) {
    const auto& section = json.at("synth");
    check_keys(section, "section \"synth\"",
               {"count", "min_nodes", "base_rate", "influence_shape", "decay", "window_t",
                "delta_t", "direction_signal", "time_signal", "max_nodes"});
    auto& synth = config.synth;
    synth.count = get_or<std::int64_t>(section, "count", synth.count);
    synth.min_nodes = get_or<std::int64_t>(section, "min_nodes", synth.min_nodes);
    synth.gen.base_rate = get_or<double>(section, "base_rate", synth.gen.base_rate);
    synth.gen.influence_shape =
        get_or<double>(section, "influence_shape", synth.gen.influence_shape);
    synth.gen.decay = get_or<double>(section, "decay", synth.gen.decay);
    synth.gen.window_t = get_or<double>(section, "window_t", synth.gen.window_t);
    synth.gen.delta_t = get_or<double>(section, "delta_t", synth.gen.delta_t);
    synth.gen.direction_signal =
        get_or<double>(section, "direction_signal", synth.gen.direction_signal);
    synth.gen.time_signal = get_or<double>(section, "time_signal", synth.gen.time_signal);
    synth.gen.max_nodes = get_or<std::int64_t>(section, "max_nodes", synth.gen.max_nodes);
  }

  if (json.contains("data")) {
    const auto& section = json.at("data");
    check_keys(section, "section \"data\"",
               {"dataset", "train", "val", "test", "split", "min_nodes"});
    auto& data = config.data;
    data.dataset = get_or<std::string>(section, "dataset", data.dataset);
    data.train = get_or<std::string>(section, "train", data.train);
    data.val = get_or<std::string>(section, "val", data.val);
    data.test = get_or<std::string>(section, "test", data.test);
    data.split_weights = get_or<std::vector<double>>(section, "split", data.split_weights);
    data.min_nodes = get_or<std::int64_t>(section, "min_nodes", data.min_nodes);
    if (data.split_weights.size() != 3) {
      throw ConfigError("data.split must list exactly three weights");
    }
  }

  if (json.contains("model")) {
    const auto& section = json.at("model");
    check_keys(section, "section \"model\"",
               {"kind", "variant", "embed_dim", "iterations", "readout_dim", "mlp_hidden",
                "vocab_size"});
    auto& model_section = config.model;
    model_section.kind = get_or<std::string>(section, "kind", model_section.kind);
    if (model_section.kind != "casgcn" && model_section.kind != "feature-linear" &&
        model_section.kind != "feature-deep") {
      throw ConfigError("model.kind must be casgcn, feature-linear, or feature-deep");
    }
    auto& mc = model_section.config;
    if (section.contains("variant")) {
      try {
        mc.variant = model::variant_from_string(section.at("variant").get<std::string>());
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
    }
    mc.embed_dim = get_or<int>(section, "embed_dim", mc.embed_dim);
    mc.iterations = get_or<int>(section, "iterations", mc.iterations);
    mc.readout_dim = get_or<int>(section, "readout_dim", mc.readout_dim);
    mc.mlp_hidden = get_or<std::vector<int>>(section, "mlp_hidden", mc.mlp_hidden);
    mc.vocab_size = get_or<int>(section, "vocab_size", mc.vocab_size);
  }

  if (json.contains("train")) {
    const auto& section = json.at("train");
    check_keys(section, "section \"train\"",
               {"learning_rate", "epochs", "batch_size", "patience", "optimizer",
                "target_space", "ridge_lambda", "deep_hidden"});
    auto& tc = config.train.config;
    tc.learning_rate = get_or<double>(section, "learning_rate", tc.learning_rate);
    tc.epochs = get_or<int>(section, "epochs", tc.epochs);
    tc.batch_size = get_or<int>(section, "batch_size", tc.batch_size);
    tc.patience = get_or<int>(section, "patience", tc.patience);
    try {
      if (section.contains("optimizer")) {
        tc.optimizer =
            train::optimizer_from_string(section.at("optimizer").get<std::string>());
      }
      if (section.contains("target_space")) {
        tc.target_space =
            train::target_space_from_string(section.at("target_space").get<std::string>());
      }
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    config.train.ridge_lambda =
        get_or<double>(section, "ridge_lambda", config.train.ridge_lambda);
    config.train.deep_hidden =
        get_or<std::vector<int>>(section, "deep_hidden", config.train.deep_hidden);
  }

  if (json.contains("weibo")) {
    const auto& section = json.at("weibo");
    check_keys(section, "section \"weibo\"", {"sources", "t", "delta_t"});
    config.weibo.sources =
        get_or<std::vector<std::string>>(section, "sources", config.weibo.sources);
    config.weibo.t = get_or<double>(section, "t", config.weibo.t);
    config.weibo.delta_t = get_or<double>(section, "delta_t", config.weibo.delta_t);
  }

  if (json.contains("citations")) {
    const auto& section = json.at("citations");
    check_keys(section, "section \"citations\"",
               {"source", "t_years", "delta_t_years", "targets", "min_year", "max_year"});
    auto& cit = config.citations;
    cit.source = get_or<std::string>(section, "source", cit.source);
    cit.t_years = get_or<int>(section, "t_years", cit.t_years);
    cit.delta_t_years = get_or<int>(section, "delta_t_years", cit.delta_t_years);
    cit.targets = get_or<std::vector<std::string>>(section, "targets", cit.targets);
    cit.min_year = get_or<int>(section, "min_year", cit.min_year);
    cit.max_year = get_or<int>(section, "max_year", cit.max_year);
  }

  if (json.contains("evaluate")) {
    const auto& section = json.at("evaluate");
    check_keys(section, "section \"evaluate\"", {"checkpoint", "vocab"});
    config.evaluate.checkpoint =
        get_or<std::string>(section, "checkpoint", config.evaluate.checkpoint);
    config.evaluate.vocab = get_or<std::string>(section, "vocab", config.evaluate.vocab);
  }

  if (json.contains("compare")) {
    const auto& section = json.at("compare");
    check_keys(section, "section \"compare\"", {"datasets", "seeds"});
    if (section.contains("datasets")) {
      config.compare.datasets.clear();
      for (const auto& entry : section.at("datasets")) {
        check_keys(entry, "compare.datasets entry", {"name", "path"});
        CompareDataset dataset;
        dataset.name = get_or<std::string>(entry, "name", "");
        dataset.path = get_or<std::string>(entry, "path", "");
        if (dataset.name.empty() || dataset.path.empty()) {
          throw ConfigError("compare.datasets entries need name and path");
        }
        config.compare.datasets.push_back(std::move(dataset));
      }
    }
    config.compare.seeds =
        get_or<std::vector<std::uint64_t>>(section, "seeds", config.compare.seeds);
  }

  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  ordered_json json;
  try {
    in >> json;
  } catch (const std::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return parse_run_config(json);
}

ordered_json to_json(const RunConfig& config) {
  ordered_json json;
  if (!config.command.empty()) json["command"] = config.command;
  json["out_dir"] = config.out_dir;
  json["seed"] = config.seed;
  json["synth"] = {{"count", config.synth.count},
                   {"min_nodes", config.synth.min_nodes},
                   {"base_rate", config.synth.gen.base_rate},
                   {"influence_shape", config.synth.gen.influence_shape},
                   {"decay", config.synth.gen.decay},
                   {"window_t", config.synth.gen.window_t},
                   {"delta_t", config.synth.gen.delta_t},
                   {"direction_signal", config.synth.gen.direction_signal},
                   {"time_signal", config.synth.gen.time_signal},
                   {"max_nodes", config.synth.gen.max_nodes}};
  json["data"] = {{"dataset", config.data.dataset}, {"train", config.data.train},
                  {"val", config.data.val},         {"test", config.data.test},
                  {"split", config.data.split_weights}, {"min_nodes", config.data.min_nodes}};
  json["model"] = {{"kind", config.model.kind},
                   {"variant", model::variant_to_string(config.model.config.variant)},
                   {"embed_dim", config.model.config.embed_dim},
                   {"iterations", config.model.config.iterations},
                   {"readout_dim", config.model.config.readout_dim},
                   {"mlp_hidden", config.model.config.mlp_hidden},
                   {"vocab_size", config.model.config.vocab_size}};
  json["train"] = {{"learning_rate", config.train.config.learning_rate},
                   {"epochs", config.train.config.epochs},
                   {"batch_size", config.train.config.batch_size},
                   {"patience", config.train.config.patience},
                   {"optimizer", train::optimizer_to_string(config.train.config.optimizer)},
                   {"target_space",
                    train::target_space_to_string(config.train.config.target_space)},
                   {"ridge_lambda", config.train.ridge_lambda},
                   {"deep_hidden", config.train.deep_hidden}};
  json["weibo"] = {{"sources", config.weibo.sources},
                   {"t", config.weibo.t},
                   {"delta_t", config.weibo.delta_t}};
  json["citations"] = {{"source", config.citations.source},
                       {"t_years", config.citations.t_years},
                       {"delta_t_years", config.citations.delta_t_years},
                       {"targets", config.citations.targets},
                       {"min_year", config.citations.min_year},
                       {"max_year", config.citations.max_year}};
  json["evaluate"] = {{"checkpoint", config.evaluate.checkpoint},
                      {"vocab", config.evaluate.vocab}};
  ordered_json datasets = ordered_json::array();
  for (const auto& dataset : config.compare.datasets) {
    datasets.push_back({{"name", dataset.name}, {"path", dataset.path}});
  }
  json["compare"] = {{"datasets", datasets}, {"seeds", config.compare.seeds}};
  return json;
}

void apply_override(ordered_json& json, const std::string& assignment) {
  const std::size_t equals = assignment.find('=');
  if (equals == std::string::npos || equals == 0) {
    throw ConfigError("override must look like section.key=value: " + assignment);
  }
  const std::string path = assignment.substr(0, equals);
  const std::string raw = assignment.substr(equals + 1);

  ordered_json value;
  try {
    value = ordered_json::parse(raw);
  } catch (const std::exception&) {
    value = raw;  // unquoted strings pass through
  }

  ordered_json* cursor = &json;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos
                                                                        : dot - start);
    if (key.empty()) throw ConfigError("override has an empty path segment: " + assignment);
    if (dot == std::string::npos) {
      (*cursor)[key] = value;
      break;
    }
    cursor = &(*cursor)[key];
    start = dot + 1;
  }
}

}  // namespace casgcn::cli
