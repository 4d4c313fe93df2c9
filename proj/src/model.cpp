#include "casgcn/model.hpp"

#include "casgcn/rng.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace casgcn::model {

namespace {

int aggregated_width(Variant variant, int embed_dim) {
  return variant == Variant::undirected ? embed_dim : 2 * embed_dim;
}

int attention_input_width(Variant variant, int embed_dim) {
  return variant == Variant::no_time ? embed_dim : embed_dim + 1;
}

Matrix row_normalized(const Matrix& adjacency) {
  Matrix normalized = adjacency;
  for (Eigen::Index v = 0; v < normalized.rows(); ++v) {
    const double degree = normalized.row(v).sum();
    if (degree > 0.0) normalized.row(v) /= degree;
  }
  return normalized;
}

}  // namespace

Variant variant_from_string(const std::string& name) {
  if (name == "full") return Variant::full;
  if (name == "max_pool") return Variant::max_pool;
  if (name == "mean_pool") return Variant::mean_pool;
  if (name == "undirected") return Variant::undirected;
  if (name == "no_time") return Variant::no_time;
  throw std::invalid_argument("unknown model variant: " + name);
}

std::string variant_to_string(Variant variant) {
  switch (variant) {
    case Variant::full: return "full";
    case Variant::max_pool: return "max_pool";
    case Variant::mean_pool: return "mean_pool";
    case Variant::undirected: return "undirected";
    case Variant::no_time: return "no_time";
  }
  throw std::logic_error("unreachable variant");
}

std::string variant_display_name(Variant variant) {
  switch (variant) {
    case Variant::full: return "CasGCN";
    case Variant::max_pool: return "CasGCN-max";
    case Variant::mean_pool: return "CasGCN-mean";
    case Variant::undirected: return "CasGCN-undirected";
    case Variant::no_time: return "CasGCN(no time effect)";
  }
  throw std::logic_error("unreachable variant");
}

std::vector<Variant> all_variants() {
  return {Variant::full, Variant::max_pool, Variant::mean_pool, Variant::undirected,
          Variant::no_time};
}

void validate(const ModelConfig& config) {
  if (config.embed_dim < 1) throw std::invalid_argument("model: embed_dim must be >= 1");
  if (config.iterations < 1) throw std::invalid_argument("model: iterations must be >= 1");
  if (config.readout_dim < 1) throw std::invalid_argument("model: readout_dim must be >= 1");
  if (config.vocab_size < 1) throw std::invalid_argument("model: vocab_size must be >= 1");
  for (int width : config.mlp_hidden) {
    if (width < 1) throw std::invalid_argument("model: mlp_hidden widths must be >= 1");
  }
}

Vocab Vocab::build(const std::vector<LabeledCascade>& cascades, int cap) {
  if (cap < 1) throw std::invalid_argument("vocab: cap must be >= 1");
  Vocab vocab;
  for (const auto& cascade : cascades) {
    for (const auto& node : cascade.graph.nodes) {
      if (static_cast<int>(vocab.ids_.size()) >= cap) return vocab;
      if (vocab.index_.emplace(node.id, static_cast<int>(vocab.ids_.size())).second) {
        vocab.ids_.push_back(node.id);
      }
    }
  }
  return vocab;
}

std::optional<int> Vocab::index(const NodeId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocab::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("vocab: cannot open for writing: " + path);
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    out << i << "\t" << ids_[i] << "\n";
  }
}

Vocab Vocab::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("vocab: cannot open: " + path);
  Vocab vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error("vocab: " + path + ":" + std::to_string(line_no) +
                               ": expected index<TAB>id");
    }
    const NodeId id = line.substr(tab + 1);
    vocab.index_.emplace(id, static_cast<int>(vocab.ids_.size()));
    vocab.ids_.push_back(id);
  }
  return vocab;
}

ModelParams init_params(const ModelConfig& config, const Vocab& vocab, std::uint64_t seed) {
  validate(config);
  rng::Engine engine(seed);
  auto fill = [&engine](Matrix& m, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = engine.uniform(-bound, bound);
      }
    }
  };

  const int d = config.embed_dim;
  const int e = config.readout_dim;
  const int agg = aggregated_width(config.variant, d);
  const int attn_in = attention_input_width(config.variant, d);

  ModelParams params;
  params.vocab = vocab;
  auto add = [&params, &fill](const std::string& name, int rows, int cols, int fan_in) {
    Matrix m(rows, cols);
    fill(m, fan_in);
    params.store.add(name, std::move(m));
  };

  add("embedding", vocab.size() + 1, d, d);  // last row serves unknown ids
  add("gate_reset_in", d, agg, agg);
  add("gate_reset_state", d, d, d);
  add("gate_update_in", d, agg, agg);
  add("gate_update_state", d, d, d);
  add("gate_cand_in", d, agg, agg);
  add("gate_cand_state", d, d, d);
  add("attn_gate_w", e, attn_in, attn_in);
  add("attn_gate_b", 1, e, attn_in);
  add("attn_value_w", e, attn_in, attn_in);
  add("attn_value_b", 1, e, attn_in);

  int in_width = e;
  int layer = 0;
  for (int width : config.mlp_hidden) {
    add("mlp" + std::to_string(layer) + "_w", width, in_width, in_width);
    add("mlp" + std::to_string(layer) + "_b", 1, width, in_width);
    in_width = width;
    ++layer;
  }
  add("mlp" + std::to_string(layer) + "_w", 1, in_width, in_width);
  add("mlp" + std::to_string(layer) + "_b", 1, 1, in_width);
  return params;
}

ModelVars resolve_vars(const ad::ParamStore& params, const ad::BoundParams& bound) {
  if (params.size() != bound.vars.size()) {
    throw std::invalid_argument("model: bound parameter count mismatch");
  }
  ModelVars vars;
  std::vector<std::pair<ad::Var, ad::Var>> mlp_layers;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& name = params.name(i);
    const ad::Var var = bound.vars[i];
    if (name == "embedding") vars.embedding = var;
    else if (name == "gate_reset_in") vars.gate_reset_in = var;
    else if (name == "gate_reset_state") vars.gate_reset_state = var;
    else if (name == "gate_update_in") vars.gate_update_in = var;
    else if (name == "gate_update_state") vars.gate_update_state = var;
    else if (name == "gate_cand_in") vars.gate_cand_in = var;
    else if (name == "gate_cand_state") vars.gate_cand_state = var;
    else if (name == "attn_gate_w") vars.attn_gate_w = var;
    else if (name == "attn_gate_b") vars.attn_gate_b = var;
    else if (name == "attn_value_w") vars.attn_value_w = var;
    else if (name == "attn_value_b") vars.attn_value_b = var;
    else if (name.rfind("mlp", 0) == 0) {
      const std::size_t underscore = name.find('_');
      const auto layer = static_cast<std::size_t>(std::stoi(name.substr(3, underscore - 3)));
      if (layer >= mlp_layers.size()) mlp_layers.resize(layer + 1);
      if (name.substr(underscore + 1) == "w") {
        mlp_layers[layer].first = var;
      } else {
        mlp_layers[layer].second = var;
      }
    } else {
      throw std::invalid_argument("model: unexpected parameter: " + name);
    }
  }
  for (const auto& layer : mlp_layers) {
    if (!layer.first.valid() || !layer.second.valid()) {
      throw std::invalid_argument("model: incomplete mlp layer parameters");
    }
    vars.mlp.push_back(layer);
  }
  return vars;
}

ConvContext make_conv_context(ad::Tape& tape, const AdjacencyPair& adjacency, Variant variant,
                              int embed_dim) {
  ConvContext context;
  context.variant = variant;
  const auto n = adjacency.a_in.rows();
  context.ones = tape.leaf(Matrix::Ones(n, embed_dim));
  switch (variant) {
    case Variant::full:
    case Variant::no_time:
      context.agg_in = tape.leaf(adjacency.a_in);
      context.agg_out = tape.leaf(adjacency.a_out);
      break;
    case Variant::mean_pool:
      context.agg_in = tape.leaf(row_normalized(adjacency.a_in));
      context.agg_out = tape.leaf(row_normalized(adjacency.a_out));
      break;
    case Variant::max_pool:
      context.a_in_raw = adjacency.a_in;
      context.a_out_raw = adjacency.a_out;
      break;
    case Variant::undirected:
      context.agg_sym = tape.leaf(adjacency.a_in + adjacency.a_out);
      break;
  }
  return context;
}

ad::Var gru_blend(ad::Tape& tape, ad::Var update_gate, ad::Var h_prev, ad::Var h_cand) {
  const auto rows = tape.value(update_gate).rows();
  const auto cols = tape.value(update_gate).cols();
  ad::Var ones = tape.leaf(Matrix::Ones(rows, cols));
  return tape.add(tape.mul(tape.sub(ones, update_gate), h_prev),
                  tape.mul(update_gate, h_cand));
}

ad::Var conv_step(ad::Tape& tape, ad::Var h_prev, const ConvContext& context,
                  const ModelVars& vars, GateVars* gates) {
  ad::Var aggregated;
  switch (context.variant) {
    case Variant::full:
    case Variant::no_time:
    case Variant::mean_pool:
      aggregated = tape.concat_cols(tape.matmul(context.agg_in, h_prev),
                                    tape.matmul(context.agg_out, h_prev));
      break;
    case Variant::max_pool:
      aggregated = tape.concat_cols(tape.neighbor_max(h_prev, context.a_in_raw),
                                    tape.neighbor_max(h_prev, context.a_out_raw));
      break;
    case Variant::undirected:
      aggregated = tape.matmul(context.agg_sym, h_prev);
      break;
  }

  ad::Var reset = tape.sigmoid(
      tape.add(tape.matmul(aggregated, tape.transpose(vars.gate_reset_in)),
               tape.matmul(h_prev, tape.transpose(vars.gate_reset_state))));
  ad::Var update = tape.sigmoid(
      tape.add(tape.matmul(aggregated, tape.transpose(vars.gate_update_in)),
               tape.matmul(h_prev, tape.transpose(vars.gate_update_state))));
  ad::Var candidate = tape.tanh(
      tape.add(tape.matmul(aggregated, tape.transpose(vars.gate_cand_in)),
               tape.matmul(tape.mul(reset, h_prev), tape.transpose(vars.gate_cand_state))));
  if (gates) {
    gates->reset = reset;
    gates->update = update;
  }
  return gru_blend(tape, update, h_prev, candidate);
}

ad::Var embed_nodes(ad::Tape& tape, ad::Var embedding, const std::vector<TimedNode>& nodes,
                    const Vocab& vocab) {
  const auto rows = tape.value(embedding).rows();
  Matrix selection = Matrix::Zero(static_cast<Eigen::Index>(nodes.size()), rows);
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    const auto idx = vocab.index(nodes[v].id);
    selection(static_cast<Eigen::Index>(v), idx ? *idx : rows - 1) = 1.0;
  }
  return tape.matmul(tape.leaf(std::move(selection)), embedding);
}

Matrix temporal_vector(const CascadeGraph& graph) {
  if (!(graph.window_t > 0.0)) {
    throw std::invalid_argument("temporal_vector: window_t must be positive");
  }
  Matrix times(graph.node_count(), 1);
  for (std::size_t v = 0; v < graph.nodes.size(); ++v) {
    times(static_cast<Eigen::Index>(v), 0) = graph.nodes[v].time / graph.window_t;
  }
  return times;
}

ad::Var attention_readout(ad::Tape& tape, ad::Var h_nodes, const Matrix& times,
                          const ModelVars& vars, Variant variant) {
  ad::Var per_node = h_nodes;
  if (variant != Variant::no_time) {
    per_node = tape.concat_cols(h_nodes, tape.leaf(times));
  }
  const auto n = tape.value(per_node).rows();
  ad::Var ones_col = tape.leaf(Matrix::Ones(n, 1));
  ad::Var gate = tape.add(tape.matmul(per_node, tape.transpose(vars.attn_gate_w)),
                          tape.matmul(ones_col, vars.attn_gate_b));
  ad::Var value = tape.add(tape.matmul(per_node, tape.transpose(vars.attn_value_w)),
                           tape.matmul(ones_col, vars.attn_value_b));
  return tape.relu(tape.row_sum(tape.mul(tape.sigmoid(gate), tape.tanh(value))));
}

ad::Var mlp_head(ad::Tape& tape, ad::Var readout, const ModelVars& vars) {
  ad::Var x = readout;
  for (std::size_t layer = 0; layer < vars.mlp.size(); ++layer) {
    x = tape.add(tape.matmul(x, tape.transpose(vars.mlp[layer].first)),
                 vars.mlp[layer].second);
    if (layer + 1 < vars.mlp.size()) x = tape.relu(x);
  }
  return x;
}

ad::Var forward_from_vars(ad::Tape& tape, const ModelVars& vars, const Vocab& vocab,
                          const ModelConfig& config, const CascadeGraph& graph) {
  AdjacencyPair adjacency = build_adjacency(graph);
  ConvContext context = make_conv_context(tape, adjacency, config.variant, config.embed_dim);

  ad::Var h = embed_nodes(tape, vars.embedding, graph.nodes, vocab);
  for (int round = 0; round < config.iterations; ++round) {
    h = conv_step(tape, h, context, vars);
  }

  const Matrix times =
      config.variant == Variant::no_time ? Matrix() : temporal_vector(graph);
  ad::Var readout = attention_readout(tape, h, times, vars, config.variant);
  return mlp_head(tape, readout, vars);
}

Forward forward_cascade(const ModelParams& params, const ModelConfig& config,
                        const CascadeGraph& graph) {
  Forward fwd;
  fwd.bound = ad::bind_params(fwd.tape, params.store);
  ModelVars vars = resolve_vars(params.store, fwd.bound);
  fwd.y_hat = forward_from_vars(fwd.tape, vars, params.vocab, config, graph);
  return fwd;
}

CascadeRepresentation represent(const ModelParams& params, const ModelConfig& config,
                                const CascadeGraph& graph) {
  ad::Tape tape;
  ad::BoundParams bound = ad::bind_params(tape, params.store);
  ModelVars vars = resolve_vars(params.store, bound);

  AdjacencyPair adjacency = build_adjacency(graph);
  ConvContext context = make_conv_context(tape, adjacency, config.variant, config.embed_dim);
  ad::Var h = embed_nodes(tape, vars.embedding, graph.nodes, params.vocab);
  for (int round = 0; round < config.iterations; ++round) {
    h = conv_step(tape, h, context, vars);
  }

  CascadeRepresentation rep;
  rep.node_states = tape.value(h);
  if (config.variant != Variant::no_time) rep.times = temporal_vector(graph);
  ad::Var readout = attention_readout(tape, h, rep.times, vars, config.variant);
  rep.readout = tape.value(readout).row(0).transpose();
  return rep;
}

double predict_log(const ModelParams& params, const ModelConfig& config,
                   const CascadeGraph& graph) {
  Forward fwd = forward_cascade(params, config, graph);
  return fwd.tape.value(fwd.y_hat)(0, 0);
}

double growth_from_log(double log_growth) {
  return std::max(0.0, std::expm1(log_growth));
}

double predict_growth(const ModelParams& params, const ModelConfig& config,
                      const CascadeGraph& graph) {
  return growth_from_log(predict_log(params, config, graph));
}

Matrix embed_nodes_values(const ModelParams& params, const std::vector<TimedNode>& nodes) {
  ad::Tape tape;
  ad::Var embedding = tape.leaf(params.store.at("embedding"));
  return tape.value(embed_nodes(tape, embedding, nodes, params.vocab));
}

Matrix conv_step_values(const Matrix& h_prev, const AdjacencyPair& adjacency,
                        const ModelParams& params, const ModelConfig& config,
                        Matrix* reset_gate, Matrix* update_gate) {
  ad::Tape tape;
  ad::BoundParams bound = ad::bind_params(tape, params.store);
  ModelVars vars = resolve_vars(params.store, bound);
  ConvContext context = make_conv_context(tape, adjacency, config.variant, config.embed_dim);
  GateVars gates;
  ad::Var h = conv_step(tape, tape.leaf(h_prev), context, vars, &gates);
  if (reset_gate) *reset_gate = tape.value(gates.reset);
  if (update_gate) *update_gate = tape.value(gates.update);
  return tape.value(h);
}

Vector attention_readout_values(const Matrix& h_nodes, const Matrix& times,
                                const ModelParams& params, const ModelConfig& config) {
  ad::Tape tape;
  ad::BoundParams bound = ad::bind_params(tape, params.store);
  ModelVars vars = resolve_vars(params.store, bound);
  ad::Var readout =
      attention_readout(tape, tape.leaf(h_nodes), times, vars, config.variant);
  return tape.value(readout).row(0).transpose();
}

}  // namespace casgcn::model
