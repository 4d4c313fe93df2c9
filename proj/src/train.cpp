#include "casgcn/train.hpp"

#include "casgcn/checkpoint.hpp"
#include "casgcn/rng.hpp"
#include "casgcn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace casgcn::train {

Optimizer optimizer_from_string(const std::string& name) {
  if (name == "sgd") return Optimizer::sgd;
  if (name == "adam") return Optimizer::adam;
  throw std::invalid_argument("unknown optimizer: " + name);
}

std::string optimizer_to_string(Optimizer opt) {
  return opt == Optimizer::sgd ? "sgd" : "adam";
}

TargetSpace target_space_from_string(const std::string& name) {
  if (name == "log") return TargetSpace::log_growth;
  if (name == "raw") return TargetSpace::raw_growth;
  throw std::invalid_argument("unknown target space: " + name);
}

std::string target_space_to_string(TargetSpace space) {
  return space == TargetSpace::log_growth ? "log" : "raw";
}

void validate(const TrainConfig& config) {
  if (config.learning_rate < 0.0 || !std::isfinite(config.learning_rate)) {
    throw std::invalid_argument("train: learning_rate must be finite and >= 0");
  }
  if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (config.patience < 0) throw std::invalid_argument("train: patience must be >= 0");
}

EvalReport msle(const std::vector<double>& predicted_growth,
                const std::vector<double>& actual_growth) {
  if (predicted_growth.size() != actual_growth.size()) {
    throw std::invalid_argument("msle: vectors differ in length (" +
                                std::to_string(predicted_growth.size()) + " vs " +
                                std::to_string(actual_growth.size()) + ")");
  }
  if (predicted_growth.empty()) throw std::invalid_argument("msle: need at least one entry");

  EvalReport report;
  report.n = static_cast<std::int64_t>(predicted_growth.size());
  report.per_cascade_sle.reserve(predicted_growth.size());
  double total = 0.0;
  for (std::size_t i = 0; i < predicted_growth.size(); ++i) {
    if (predicted_growth[i] < 0.0 || actual_growth[i] < 0.0) {
      throw std::invalid_argument("msle: growth values must be non-negative (entry " +
                                  std::to_string(i) + ")");
    }
    const double d = std::log1p(predicted_growth[i]) - std::log1p(actual_growth[i]);
    report.per_cascade_sle.push_back(d * d);
    total += d * d;
  }
  report.msle = total / static_cast<double>(report.n);
  return report;
}

namespace {

double target_value(const LabeledCascade& cascade, TargetSpace space,
                    const std::string& context) {
  if (!cascade.label) {
    throw std::invalid_argument(context + ": cascade \"" + cascade.graph.cascade_id +
                                "\" has no growth label");
  }
  const double growth = static_cast<double>(cascade.label->delta_s);
  return space == TargetSpace::log_growth ? std::log1p(growth) : growth;
}

double growth_prediction(double y_hat, TargetSpace space) {
  if (space == TargetSpace::log_growth) return model::growth_from_log(y_hat);
  return std::max(0.0, y_hat);
}

struct AdamState {
  ad::GradientMap first;
  ad::GradientMap second;
  std::int64_t step{0};
};

void apply_update(ad::ParamStore& params, const ad::GradientMap& gradient,
                  const TrainConfig& config, AdamState& adam) {
  if (config.optimizer == Optimizer::sgd) {
    for (std::size_t p = 0; p < params.size(); ++p) {
      params.value(p) -= config.learning_rate * gradient.grads[p];
    }
    return;
  }
  ++adam.step;
  const double bias1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(adam.step));
  const double bias2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(adam.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    adam.first.grads[p] = config.adam_beta1 * adam.first.grads[p] +
                          (1.0 - config.adam_beta1) * gradient.grads[p];
    adam.second.grads[p] = config.adam_beta2 * adam.second.grads[p] +
                           (1.0 - config.adam_beta2) *
                               gradient.grads[p].cwiseProduct(gradient.grads[p]);
    params.value(p) -=
        (config.learning_rate / bias1) *
        adam.first.grads[p].cwiseQuotient(
            ((adam.second.grads[p] / bias2).cwiseSqrt().array() + config.adam_eps).matrix());
  }
}

}  // namespace

EvalReport evaluate_casgcn(const model::ModelParams& params,
                           const model::ModelConfig& config,
                           const std::vector<LabeledCascade>& cascades,
                           TargetSpace space) {
  std::vector<double> predicted, actual;
  predicted.reserve(cascades.size());
  actual.reserve(cascades.size());
  for (const auto& cascade : cascades) {
    if (!cascade.label) {
      throw std::invalid_argument("evaluate: cascade \"" + cascade.graph.cascade_id +
                                  "\" has no growth label");
    }
    predicted.push_back(
        growth_prediction(model::predict_log(params, config, cascade.graph), space));
    actual.push_back(static_cast<double>(cascade.label->delta_s));
  }
  return msle(predicted, actual);
}

TrainResult train_casgcn(model::ModelParams params, const DatasetSplit& split,
                         const model::ModelConfig& model_config, const TrainConfig& config) {
  validate(config);
  if (split.train.empty()) throw std::invalid_argument("train: empty training split");

  TrainResult result;
  result.best_epoch = 0;
  result.best_val_msle = std::numeric_limits<double>::infinity();

  AdamState adam{ad::zero_gradients(params.store), ad::zero_gradients(params.store), 0};

  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), 0);

  int epochs_since_best = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng::Engine shuffler(rng::derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    shuffler.shuffle(order);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      ad::GradientMap batch = ad::zero_gradients(params.store);
      for (std::size_t i = start; i < stop; ++i) {
        const LabeledCascade& cascade = split.train[order[i]];
        model::Forward fwd = model::forward_cascade(params, model_config, cascade.graph);
        ad::Var target = fwd.tape.leaf(Matrix::Constant(
            1, 1, target_value(cascade, config.target_space, "train")));
        ad::Var diff = fwd.tape.sub(fwd.y_hat, target);
        ad::Var loss = fwd.tape.mul(diff, diff);

        const double loss_value = fwd.tape.value(loss)(0, 0);
        if (!std::isfinite(loss_value)) {
          throw std::runtime_error(
              "train: loss diverged at epoch " + std::to_string(epoch) +
              " (last finite epoch " + std::to_string(epoch - 1) + ")");
        }
        epoch_loss += loss_value;
        batch.accumulate(ad::param_gradients(fwd.tape, loss, fwd.bound, params.store));
      }
      batch.scale(1.0 / static_cast<double>(stop - start));
      apply_update(params.store, batch, config, adam);
    }
    epoch_loss /= static_cast<double>(order.size());

    const EvalReport val =
        split.val.empty()
            ? EvalReport{0.0, {}, 0}
            : evaluate_casgcn(params, model_config, split.val, config.target_space);
    result.history.push_back({epoch, epoch_loss, val.msle});

    if (val.msle < result.best_val_msle) {
      result.best_val_msle = val.msle;
      result.best_epoch = epoch;
      result.params = params;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
      if (epochs_since_best > config.patience) break;
    }
  }

  if (result.best_epoch == 0) {
    // no validation improvement was ever recorded (e.g. empty val split)
    result.params = std::move(params);
    result.best_epoch = result.history.empty() ? 0 : result.history.back().epoch;
    result.best_val_msle = result.history.empty() ? 0.0 : result.history.back().val_msle;
  }
  return result;
}

double compare_significance(const std::vector<double>& sle_a, const std::vector<double>& sle_b) {
  return stats::paired_t_test_p(sle_a, sle_b);
}

std::string significance_stars(double p_value) {
  if (p_value < 0.01) return "***";
  if (p_value < 0.05) return "**";
  if (p_value < 0.1) return "*";
  return "";
}

void write_history_tsv(const std::string& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open history file: " + path);
  out << "epoch\ttrain_mse_log\tval_msle\n";
  for (const auto& record : history) {
    out << record.epoch << "\t" << ad::format_double(record.train_loss) << "\t"
        << ad::format_double(record.val_msle) << "\n";
  }
}

}  // namespace casgcn::train
