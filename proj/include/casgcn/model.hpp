// CasGCN forward computation: shared node embedding, k rounds of
// bi-directional gated graph convolution, temporal features, attention
// readout and an MLP head, plus the pooling/direction/time ablation
// variants. All forward passes build on the reverse-mode tape so the same
// graph serves prediction and training.
#pragma once

#include "casgcn/cascade.hpp"
#include "casgcn/tape.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace casgcn::model {

enum class Variant { full, max_pool, mean_pool, undirected, no_time };

Variant variant_from_string(const std::string& name);
std::string variant_to_string(Variant variant);
std::string variant_display_name(Variant variant);  // table row labels
std::vector<Variant> all_variants();

struct ModelConfig {
  int embed_dim{8};       // D
  int iterations{2};      // k
  int readout_dim{8};     // E
  std::vector<int> mlp_hidden{8};
  Variant variant{Variant::full};
  int vocab_size{512};    // cap on learned node-id rows (plus one unknown row)
};
void validate(const ModelConfig& config);

// Node-id table built in first-appearance order, capped at `cap` entries.
// Ids beyond the table map to the shared unknown row.
class Vocab {
 public:
  static Vocab build(const std::vector<LabeledCascade>& cascades, int cap);
  std::optional<int> index(const NodeId& id) const;
  int size() const { return static_cast<int>(ids_.size()); }
  const std::vector<NodeId>& ids() const { return ids_; }

  void write(const std::string& path) const;
  static Vocab read(const std::string& path);

 private:
  std::vector<NodeId> ids_;
  std::unordered_map<NodeId, int> index_;
};

struct ModelParams {
  ad::ParamStore store;
  Vocab vocab;
};

// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)], seeded, drawn in the
// fixed parameter order so runs reproduce exactly.
ModelParams init_params(const ModelConfig& config, const Vocab& vocab, std::uint64_t seed);

// Parameter leaves on a tape, resolved by name.
struct ModelVars {
  ad::Var embedding;
  ad::Var gate_reset_in, gate_reset_state;
  ad::Var gate_update_in, gate_update_state;
  ad::Var gate_cand_in, gate_cand_state;
  ad::Var attn_gate_w, attn_gate_b;    // i(): soft attention over node features
  ad::Var attn_value_w, attn_value_b;  // j(): candidate feature map
  std::vector<std::pair<ad::Var, ad::Var>> mlp;  // (weight, bias) per layer
};
ModelVars resolve_vars(const ad::ParamStore& params, const ad::BoundParams& bound);

// Constant tape inputs shared by the k convolution rounds.
struct ConvContext {
  Variant variant{Variant::full};
  ad::Var agg_in;   // A_in (sum) or row-normalized A_in (mean)
  ad::Var agg_out;
  ad::Var agg_sym;  // A_in + A_out, undirected variant only
  Matrix a_in_raw, a_out_raw;  // max pooling reads these directly
  ad::Var ones;     // |V| x D, for the gated blend
};
ConvContext make_conv_context(ad::Tape& tape, const AdjacencyPair& adjacency, Variant variant,
                              int embed_dim);

struct GateVars {
  ad::Var reset;
  ad::Var update;
};

// h = (1 - z) * h_prev + z * h_cand, elementwise.
ad::Var gru_blend(ad::Tape& tape, ad::Var update_gate, ad::Var h_prev, ad::Var h_cand);

// One gated convolution round over the whole node set.
ad::Var conv_step(ad::Tape& tape, ad::Var h_prev, const ConvContext& context,
                  const ModelVars& vars, GateVars* gates = nullptr);

// Initial embeddings: row v selects the vocab row of node v (unknown row
// when absent).
ad::Var embed_nodes(ad::Tape& tape, ad::Var embedding, const std::vector<TimedNode>& nodes,
                    const Vocab& vocab);

// Normalized arrival times t_v / window_t in graph node order, |V| x 1.
Matrix temporal_vector(const CascadeGraph& graph);

// g = relu(sum_v sigmoid(i(u_v)) * tanh(j(u_v))), u_v = [h_v, t_v]
// (or h_v alone under no_time). Returns a 1 x E row.
ad::Var attention_readout(ad::Tape& tape, ad::Var h_nodes, const Matrix& times,
                          const ModelVars& vars, Variant variant);

ad::Var mlp_head(ad::Tape& tape, ad::Var readout, const ModelVars& vars);

// Full forward pass from already-bound parameter leaves; the building block
// behind forward_cascade and the gradient checks.
ad::Var forward_from_vars(ad::Tape& tape, const ModelVars& vars, const Vocab& vocab,
                          const ModelConfig& config, const CascadeGraph& graph);

struct Forward {
  ad::Tape tape;
  ad::BoundParams bound;
  ad::Var y_hat;  // predicted log-growth, 1 x 1
};
Forward forward_cascade(const ModelParams& params, const ModelConfig& config,
                        const CascadeGraph& graph);

// The learned cascade summary: per-node states after k rounds, the
// normalized time vector (empty under no_time), and the pooled readout.
struct CascadeRepresentation {
  Matrix node_states;  // |V| x D
  Matrix times;        // |V| x 1, entries in [0,1] with one zero
  Vector readout;      // E
};
CascadeRepresentation represent(const ModelParams& params, const ModelConfig& config,
                                const CascadeGraph& graph);

// Predicted log-growth.
double predict_log(const ModelParams& params, const ModelConfig& config,
                   const CascadeGraph& graph);
// Predicted growth count, max(0, exp(y) - 1).
double predict_growth(const ModelParams& params, const ModelConfig& config,
                      const CascadeGraph& graph);
double growth_from_log(double log_growth);

// Value-level wrappers used by tests and feature probes; each builds a small
// private tape.
Matrix embed_nodes_values(const ModelParams& params, const std::vector<TimedNode>& nodes);
Matrix conv_step_values(const Matrix& h_prev, const AdjacencyPair& adjacency,
                        const ModelParams& params, const ModelConfig& config,
                        Matrix* reset_gate = nullptr, Matrix* update_gate = nullptr);
Vector attention_readout_values(const Matrix& h_nodes, const Matrix& times,
                                const ModelParams& params, const ModelConfig& config);

}  // namespace casgcn::model
