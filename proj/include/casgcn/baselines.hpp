// Hand-crafted structural/temporal cascade features and the two feature-fed
// baseline predictors (ridge linear regression and a small feed-forward
// network). Both share the log-growth head used by the graph model so
// metric comparisons line up.
#pragma once

#include "casgcn/cascade.hpp"
#include "casgcn/tape.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace casgcn::baselines {

inline constexpr int kFeatureCount = 8;

struct HandFeatures {
  std::int64_t leaf_count{};  // nodes with no outgoing edge
  double avg_degree{};        // total degree, in + out
  double max_degree{};
  double avg_path_len{};      // shortest directed distance from the origin
  double max_path_len{};
  double avg_elapsed{};       // mean t_v over non-root nodes
  double avg_gap{};           // consecutive gaps on the time-sorted node list
  double max_gap{};

  Eigen::Matrix<double, kFeatureCount, 1> to_vector() const;
  static const std::array<const char*, kFeatureCount>& names();
};

// Degree statistics default to total degree; in/out modes support
// sensitivity checks.
enum class DegreeMode { total, in, out };

// Averages over empty sets (single-node cascades) are zero.
HandFeatures extract_features(const CascadeGraph& graph,
                              DegreeMode degree_mode = DegreeMode::total);

Matrix feature_matrix(const std::vector<LabeledCascade>& cascades);
Vector log_growth_targets(const std::vector<LabeledCascade>& cascades);

struct LinearModel {
  Vector weights;       // original feature space
  double intercept{};   // original feature space
  double ridge_lambda{};
  Vector feature_mean;
  Vector feature_scale;
  Vector std_weights;      // standardized-space coefficients
  double std_intercept{};  // equals the training-target mean
};

// Ridge regression via the normal equations on standardized features; the
// intercept is not penalized. Throws std::runtime_error when the system is
// singular at lambda = 0 (raise lambda).
LinearModel fit_linear(const Matrix& features, const Vector& log_growth, double ridge_lambda);

double predict_baseline(const LinearModel& model, const HandFeatures& features);

struct FeedForwardModel {
  ad::ParamStore store;
  Vector feature_mean;
  Vector feature_scale;
  std::vector<int> hidden;
};

struct DeepFitOptions {
  std::vector<int> hidden{16};
  double learning_rate{1e-2};
  int epochs{400};
  int batch_size{32};
  std::uint64_t seed{0};
  bool use_adam{true};  // plain gradient descent otherwise
};

struct DeepFitResult {
  FeedForwardModel model;
  std::vector<double> epoch_loss;  // mean squared error; entry 0 is pre-training
};

// Deterministic under (options.seed); trains on standardized features
// against the provided log-growth targets.
DeepFitResult fit_deep(const Matrix& features, const Vector& log_growth,
                       const DeepFitOptions& options);

double predict_baseline(const FeedForwardModel& model, const HandFeatures& features);

// Checkpoint round-trips (shared format, kind-tagged).
void write_linear_checkpoint(const std::string& path, const LinearModel& model);
LinearModel read_linear_checkpoint(const std::string& path);
void write_deep_checkpoint(const std::string& path, const FeedForwardModel& model);
FeedForwardModel read_deep_checkpoint(const std::string& path);

}  // namespace casgcn::baselines
