#include "casgcn/baselines.hpp"

#include "casgcn/checkpoint.hpp"
#include "casgcn/model.hpp"
#include "casgcn/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace casgcn::baselines {

namespace {

Vector standardize_row(const Vector& raw, const Vector& mean, const Vector& scale) {
  return (raw - mean).cwiseQuotient(scale);
}

void compute_standardization(const Matrix& features, Vector& mean, Vector& scale) {
  mean = features.colwise().mean();
  scale.resize(features.cols());
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    const double var =
        (features.col(c).array() - mean(c)).square().sum() / static_cast<double>(features.rows());
    const double sd = std::sqrt(var);
    scale(c) = sd > 0.0 ? sd : 1.0;  // constant columns pass through unscaled
  }
}

}  // namespace

Eigen::Matrix<double, kFeatureCount, 1> HandFeatures::to_vector() const {
  Eigen::Matrix<double, kFeatureCount, 1> v;
  v << static_cast<double>(leaf_count), avg_degree, max_degree, avg_path_len, max_path_len,
      avg_elapsed, avg_gap, max_gap;
  return v;
}

const std::array<const char*, kFeatureCount>& HandFeatures::names() {
  static const std::array<const char*, kFeatureCount> kNames = {
      "leaf_count", "avg_degree", "max_degree", "avg_path_len",
      "max_path_len", "avg_elapsed", "avg_gap", "max_gap"};
  return kNames;
}

HandFeatures extract_features(const CascadeGraph& graph, DegreeMode degree_mode) {
  const auto n = graph.nodes.size();
  HandFeatures features;
  if (n == 0) return features;

  std::unordered_map<NodeId, int> index;
  index.reserve(n);
  int origin = -1;
  for (std::size_t v = 0; v < n; ++v) {
    index.emplace(graph.nodes[v].id, static_cast<int>(v));
    if (graph.nodes[v].time == 0.0) origin = static_cast<int>(v);
  }

  std::vector<int> in_degree(n, 0), out_degree(n, 0);
  std::vector<std::vector<int>> children(n);
  for (const auto& [src, dst] : graph.edges) {
    const int u = index.at(src);
    const int v = index.at(dst);
    ++out_degree[static_cast<std::size_t>(u)];
    ++in_degree[static_cast<std::size_t>(v)];
    children[static_cast<std::size_t>(u)].push_back(v);
  }

  for (std::size_t v = 0; v < n; ++v) {
    if (out_degree[v] == 0) ++features.leaf_count;
    double degree = 0.0;
    switch (degree_mode) {
      case DegreeMode::total: degree = in_degree[v] + out_degree[v]; break;
      case DegreeMode::in: degree = in_degree[v]; break;
      case DegreeMode::out: degree = out_degree[v]; break;
    }
    features.avg_degree += degree;
    features.max_degree = std::max(features.max_degree, degree);
  }
  features.avg_degree /= static_cast<double>(n);

  // Depths by BFS from the origin; unreached nodes are left out of the
  // path statistics.
  if (origin >= 0) {
    std::vector<int> depth(n, -1);
    std::deque<int> queue{origin};
    depth[static_cast<std::size_t>(origin)] = 0;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : children[static_cast<std::size_t>(u)]) {
        if (depth[static_cast<std::size_t>(v)] < 0) {
          depth[static_cast<std::size_t>(v)] = depth[static_cast<std::size_t>(u)] + 1;
          queue.push_back(v);
        }
      }
    }
    std::int64_t reached = 0;
    for (std::size_t v = 0; v < n; ++v) {
      if (depth[v] < 0) continue;
      ++reached;
      features.avg_path_len += depth[v];
      features.max_path_len = std::max(features.max_path_len, static_cast<double>(depth[v]));
    }
    if (reached > 0) features.avg_path_len /= static_cast<double>(reached);
  }

  if (n > 1) {
    double elapsed = 0.0;
    std::vector<double> times;
    times.reserve(n);
    for (std::size_t v = 0; v < n; ++v) {
      times.push_back(graph.nodes[v].time);
      if (static_cast<int>(v) != origin) elapsed += graph.nodes[v].time;
    }
    features.avg_elapsed = elapsed / static_cast<double>(n - 1);

    std::sort(times.begin(), times.end());
    double gap_sum = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i) {
      const double gap = times[i] - times[i - 1];
      gap_sum += gap;
      features.max_gap = std::max(features.max_gap, gap);
    }
    features.avg_gap = gap_sum / static_cast<double>(times.size() - 1);
  }
  return features;
}

Matrix feature_matrix(const std::vector<LabeledCascade>& cascades) {
  Matrix features(static_cast<Eigen::Index>(cascades.size()), kFeatureCount);
  for (std::size_t i = 0; i < cascades.size(); ++i) {
    features.row(static_cast<Eigen::Index>(i)) =
        extract_features(cascades[i].graph).to_vector().transpose();
  }
  return features;
}

Vector log_growth_targets(const std::vector<LabeledCascade>& cascades) {
  Vector targets(static_cast<Eigen::Index>(cascades.size()));
  for (std::size_t i = 0; i < cascades.size(); ++i) {
    if (!cascades[i].label) {
      throw std::invalid_argument("baselines: cascade \"" + cascades[i].graph.cascade_id +
                                  "\" has no growth label");
    }
    targets(static_cast<Eigen::Index>(i)) =
        std::log1p(static_cast<double>(cascades[i].label->delta_s));
  }
  return targets;
}

LinearModel fit_linear(const Matrix& features, const Vector& log_growth, double ridge_lambda) {
  if (features.rows() < 1) throw std::invalid_argument("fit_linear: need at least one row");
  if (features.rows() != log_growth.size()) {
    throw std::invalid_argument("fit_linear: feature/target row mismatch");
  }
  if (ridge_lambda < 0.0) throw std::invalid_argument("fit_linear: ridge_lambda must be >= 0");

  LinearModel model;
  model.ridge_lambda = ridge_lambda;
  compute_standardization(features, model.feature_mean, model.feature_scale);

  const auto n = features.rows();
  const auto p = features.cols();
  Matrix standardized(n, p);
  for (Eigen::Index r = 0; r < n; ++r) {
    standardized.row(r) =
        standardize_row(features.row(r).transpose(), model.feature_mean, model.feature_scale)
            .transpose();
  }

  // Normal equations with an unpenalized intercept column.
  Matrix design(n, p + 1);
  design << standardized, Vector::Ones(n);
  Matrix gram = design.transpose() * design;
  gram.topLeftCorner(p, p) += ridge_lambda * Matrix::Identity(p, p);
  const Vector rhs = design.transpose() * log_growth;

  Eigen::FullPivLU<Matrix> lu(gram);
  if (!lu.isInvertible()) {
    throw std::runtime_error(
        "fit_linear: singular normal equations; raise ridge_lambda above 0");
  }
  const Vector solution = lu.solve(rhs);

  model.std_weights = solution.head(p);
  model.std_intercept = solution(p);
  model.weights = model.std_weights.cwiseQuotient(model.feature_scale);
  model.intercept =
      model.std_intercept - model.weights.dot(model.feature_mean);
  return model;
}

double predict_baseline(const LinearModel& model, const HandFeatures& features) {
  const Vector standardized =
      standardize_row(features.to_vector(), model.feature_mean, model.feature_scale);
  return model.std_weights.dot(standardized) + model.std_intercept;
}

namespace {

ad::ParamStore init_deep_params(const std::vector<int>& hidden, std::uint64_t seed) {
  rng::Engine engine(seed);
  ad::ParamStore store;
  auto add = [&store, &engine](const std::string& name, int rows, int cols, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = engine.uniform(-bound, bound);
    }
    store.add(name, std::move(m));
  };
  int in_width = kFeatureCount;
  int layer = 0;
  for (int width : hidden) {
    add("mlp" + std::to_string(layer) + "_w", width, in_width, in_width);
    add("mlp" + std::to_string(layer) + "_b", 1, width, in_width);
    in_width = width;
    ++layer;
  }
  add("mlp" + std::to_string(layer) + "_w", 1, in_width, in_width);
  add("mlp" + std::to_string(layer) + "_b", 1, 1, in_width);
  return store;
}

ad::Var deep_forward(ad::Tape& tape, const std::vector<ad::Var>& bound, ad::Var input,
                     std::size_t layer_count) {
  ad::Var x = input;
  for (std::size_t layer = 0; layer < layer_count; ++layer) {
    x = tape.add(tape.matmul(x, tape.transpose(bound[2 * layer])), bound[2 * layer + 1]);
    if (layer + 1 < layer_count) x = tape.relu(x);
  }
  return x;
}

double deep_value(const FeedForwardModel& model, const Vector& standardized) {
  ad::Tape tape;
  auto bound = ad::bind_params(tape, model.store);
  ad::Var input = tape.leaf(standardized.transpose());
  ad::Var y = deep_forward(tape, bound.vars, input, model.store.size() / 2);
  return tape.value(y)(0, 0);
}

}  // namespace

DeepFitResult fit_deep(const Matrix& features, const Vector& log_growth,
                       const DeepFitOptions& options) {
  if (features.rows() < 1) throw std::invalid_argument("fit_deep: need at least one row");
  if (features.rows() != log_growth.size()) {
    throw std::invalid_argument("fit_deep: feature/target row mismatch");
  }
  if (!(options.learning_rate > 0.0)) {
    throw std::invalid_argument("fit_deep: learning_rate must be > 0");
  }
  if (options.epochs < 1 || options.batch_size < 1) {
    throw std::invalid_argument("fit_deep: epochs and batch_size must be >= 1");
  }

  DeepFitResult result;
  FeedForwardModel& model = result.model;
  model.hidden = options.hidden;
  compute_standardization(features, model.feature_mean, model.feature_scale);
  model.store = init_deep_params(options.hidden, options.seed);
  const std::size_t layer_count = model.store.size() / 2;

  const auto n = features.rows();
  Matrix standardized(n, features.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    standardized.row(r) =
        standardize_row(features.row(r).transpose(), model.feature_mean, model.feature_scale)
            .transpose();
  }

  auto mean_loss = [&]() {
    double total = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double y = deep_value(model, standardized.row(r).transpose());
      const double d = y - log_growth(r);
      total += d * d;
    }
    return total / static_cast<double>(n);
  };
  result.epoch_loss.push_back(mean_loss());

  // Adam moments (or ignored under plain descent).
  ad::GradientMap first = ad::zero_gradients(model.store);
  ad::GradientMap second = ad::zero_gradients(model.store);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::int64_t step = 0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    rng::Engine shuffler(rng::derive_seed(options.seed, static_cast<std::uint64_t>(epoch)));
    shuffler.shuffle(order);

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
      ad::GradientMap batch = ad::zero_gradients(model.store);
      for (std::size_t i = start; i < stop; ++i) {
        ad::Tape tape;
        auto bound = ad::bind_params(tape, model.store);
        ad::Var input = tape.leaf(standardized.row(order[i]));
        ad::Var y = deep_forward(tape, bound.vars, input, layer_count);
        ad::Var target = tape.leaf(Matrix::Constant(1, 1, log_growth(order[i])));
        ad::Var diff = tape.sub(y, target);
        ad::Var loss = tape.mul(diff, diff);
        batch.accumulate(ad::param_gradients(tape, loss, bound, model.store));
      }
      batch.scale(1.0 / static_cast<double>(stop - start));

      ++step;
      for (std::size_t p = 0; p < model.store.size(); ++p) {
        Matrix& value = model.store.value(p);
        if (options.use_adam) {
          first.grads[p] = beta1 * first.grads[p] + (1.0 - beta1) * batch.grads[p];
          second.grads[p] = beta2 * second.grads[p] +
                            (1.0 - beta2) * batch.grads[p].cwiseProduct(batch.grads[p]);
          const double bias1 = 1.0 - std::pow(beta1, static_cast<double>(step));
          const double bias2 = 1.0 - std::pow(beta2, static_cast<double>(step));
          value -= (options.learning_rate / bias1) *
                   first.grads[p].cwiseQuotient(
                       ((second.grads[p] / bias2).cwiseSqrt().array() + eps).matrix());
        } else {
          value -= options.learning_rate * batch.grads[p];
        }
      }
    }
    result.epoch_loss.push_back(mean_loss());
  }
  return result;
}

double predict_baseline(const FeedForwardModel& model, const HandFeatures& features) {
  return deep_value(model,
                    standardize_row(features.to_vector(), model.feature_mean, model.feature_scale));
}

void write_linear_checkpoint(const std::string& path, const LinearModel& model) {
  ad::ParamStore store;
  store.add("weights", model.weights.transpose());
  store.add("intercept", Matrix::Constant(1, 1, model.intercept));
  store.add("ridge_lambda", Matrix::Constant(1, 1, model.ridge_lambda));
  store.add("feature_mean", model.feature_mean.transpose());
  store.add("feature_scale", model.feature_scale.transpose());
  store.add("std_weights", model.std_weights.transpose());
  store.add("std_intercept", Matrix::Constant(1, 1, model.std_intercept));
  ad::write_checkpoint(path, "feature-linear", store);
}

LinearModel read_linear_checkpoint(const std::string& path) {
  auto ckpt = ad::read_checkpoint(path);
  if (ckpt.kind != "feature-linear") {
    throw std::runtime_error("checkpoint kind mismatch: expected feature-linear, got " +
                             ckpt.kind);
  }
  LinearModel model;
  model.weights = ckpt.params.at("weights").row(0).transpose();
  model.intercept = ckpt.params.at("intercept")(0, 0);
  model.ridge_lambda = ckpt.params.at("ridge_lambda")(0, 0);
  model.feature_mean = ckpt.params.at("feature_mean").row(0).transpose();
  model.feature_scale = ckpt.params.at("feature_scale").row(0).transpose();
  model.std_weights = ckpt.params.at("std_weights").row(0).transpose();
  model.std_intercept = ckpt.params.at("std_intercept")(0, 0);
  return model;
}

void write_deep_checkpoint(const std::string& path, const FeedForwardModel& model) {
  ad::ParamStore store;
  store.add("feature_mean", model.feature_mean.transpose());
  store.add("feature_scale", model.feature_scale.transpose());
  for (std::size_t i = 0; i < model.store.size(); ++i) {
    store.add(model.store.name(i), model.store.value(i));
  }
  ad::write_checkpoint(path, "feature-deep", store);
}

FeedForwardModel read_deep_checkpoint(const std::string& path) {
  auto ckpt = ad::read_checkpoint(path);
  if (ckpt.kind != "feature-deep") {
    throw std::runtime_error("checkpoint kind mismatch: expected feature-deep, got " + ckpt.kind);
  }
  FeedForwardModel model;
  model.feature_mean = ckpt.params.at("feature_mean").row(0).transpose();
  model.feature_scale = ckpt.params.at("feature_scale").row(0).transpose();
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const std::string& name = ckpt.params.name(i);
    if (name == "feature_mean" || name == "feature_scale") continue;
    model.store.add(name, ckpt.params.value(i));
  }
  const std::size_t layer_count = model.store.size() / 2;
  for (std::size_t layer = 0; layer + 1 < layer_count; ++layer) {
    model.hidden.push_back(
        static_cast<int>(model.store.at("mlp" + std::to_string(layer) + "_w").rows()));
  }
  return model;
}

}  // namespace casgcn::baselines
