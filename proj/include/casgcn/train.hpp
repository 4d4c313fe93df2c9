// Training objective, mini-batch optimizer loop with early stopping, the
// squared-log-error evaluation metric, and the paired significance test.
#pragma once

#include "casgcn/cascade.hpp"
#include "casgcn/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace casgcn::train {

enum class Optimizer { sgd, adam };
Optimizer optimizer_from_string(const std::string& name);
std::string optimizer_to_string(Optimizer opt);

// The model head predicts log(growth + 1) by default, which makes the
// squared-error objective coincide with the evaluation metric. raw_growth
// trains on raw counts instead (kept for comparison runs).
enum class TargetSpace { log_growth, raw_growth };
TargetSpace target_space_from_string(const std::string& name);
std::string target_space_to_string(TargetSpace space);

struct TrainConfig {
  double learning_rate{1e-3};
  int epochs{100};
  int batch_size{16};  // cascades per parameter update
  int patience{10};    // epochs without validation improvement before stopping
  std::uint64_t seed{0};
  Optimizer optimizer{Optimizer::adam};
  TargetSpace target_space{TargetSpace::log_growth};
  double adam_beta1{0.9};
  double adam_beta2{0.999};
  double adam_eps{1e-8};
};
void validate(const TrainConfig& config);

struct EvalReport {
  double msle{};
  std::vector<double> per_cascade_sle;
  std::int64_t n{};
};

// MSLE over non-negative growth counts: mean of
// (ln(predicted + 1) - ln(actual + 1))^2, natural logarithm.
EvalReport msle(const std::vector<double>& predicted_growth,
                const std::vector<double>& actual_growth);

struct EpochRecord {
  int epoch{};
  double train_loss{};  // mean squared error in the training target space
  double val_msle{};
};

struct TrainResult {
  model::ModelParams params;  // the best-validation snapshot
  std::vector<EpochRecord> history;
  int best_epoch{};
  double best_val_msle{};
};

// Mini-batch training with per-epoch validation and patience-based early
// stopping; gradients within a batch accumulate in dataset order, so
// single-context runs are bitwise reproducible. Throws std::runtime_error
// on divergence, reporting the last finite epoch.
TrainResult train_casgcn(model::ModelParams params, const DatasetSplit& split,
                         const model::ModelConfig& model_config, const TrainConfig& config);

EvalReport evaluate_casgcn(const model::ModelParams& params,
                           const model::ModelConfig& config,
                           const std::vector<LabeledCascade>& cascades,
                           TargetSpace space = TargetSpace::log_growth);

// Two-sided paired t-test on per-cascade squared log errors.
double compare_significance(const std::vector<double>& sle_a, const std::vector<double>& sle_b);

// Comparison-table stars: *** p<0.01, ** p<0.05, * p<0.1, blank otherwise.
std::string significance_stars(double p_value);

// Tab-separated epoch history: epoch, train_mse_log, val_msle.
void write_history_tsv(const std::string& path, const std::vector<EpochRecord>& history);

}  // namespace casgcn::train
