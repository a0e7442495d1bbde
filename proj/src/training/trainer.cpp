#include "hrgc/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hrgc/data/csv.hpp"
#include "hrgc/errors.hpp"
#include "hrgc/json_fields.hpp"
#include "hrgc/numerics/adam.hpp"
#include "hrgc/numerics/ops.hpp"
#include "hrgc/training/evaluation.hpp"

namespace hrgc {

namespace {

template <typename Real>
Tensor<Real> features_tensor(const Sequence& s) {
  const auto& v = s.features.values();
  return Tensor<Real>::from_values({s.length(), s.features.cols()}, std::vector<Real>(v.begin(), v.end()));
}

template <typename Real>
Tensor<Real> target_tensor(const Sequence& s) {
  return Tensor<Real>::from_values({s.length(), 1}, std::vector<Real>(s.target.begin(), s.target.end()));
}

}  // namespace

void TrainConfig::validate() const {
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) throw ConfigError("train config: learning_rate must be >= 0");
  if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("train config: max_epochs must be >= 1");
  if (patience >= max_epochs) throw ConfigError("train config: patience must be smaller than max_epochs");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"batch_size", batch_size}, {"max_epochs", max_epochs},
          {"patience", patience},           {"seed", seed},             {"allow_dropout", allow_dropout}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  JsonFields(j, "train config")
      .read("learning_rate", cfg.learning_rate)
      .read("batch_size", cfg.batch_size)
      .read("max_epochs", cfg.max_epochs)
      .read("patience", cfg.patience)
      .read("seed", cfg.seed)
      .read("allow_dropout", cfg.allow_dropout)
      .finish();
  return cfg;
}

std::string history_csv(std::span<const EpochRecord> history) {
  std::string out = "epoch,train_loss,val_rmse_m\n";
  for (const EpochRecord& r : history) {
    out += std::to_string(r.epoch) + "," + format_real(r.train_loss) + "," + format_real(r.val_rmse_m) + "\n";
  }
  return out;
}

template <typename Real>
TrainResult train(HybridModel<Real>& model, std::span<const Sequence> train_set, std::span<const Sequence> validation,
                  const Standardization& stats, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw ContractError("train: empty training split");
  if (validation.empty()) throw ContractError("train: empty validation split");
  for (const auto* split : {&train_set, &validation}) {
    for (const Sequence& s : *split) {
      if (s.features.cols() != model.spec.input_channels) {
        throw ShapeError("train: sequence '" + s.sequence_id + "' has " + std::to_string(s.features.cols()) +
                         " channels, model expects " + std::to_string(model.spec.input_channels));
      }
    }
  }
  if (model.spec.dropout_rate > 0.0 && !cfg.allow_dropout) {
    throw ConfigError("train: dropout is disabled; set allow_dropout to train with rate " +
                      format_real(model.spec.dropout_rate));
  }

  std::vector<Tensor<Real>> params = model.parameters();
  AdamState<Real> adam(params, AdamConfig{cfg.learning_rate});
  Rng dropout_rng(derive_seed(cfg.seed, std::string_view("dropout")));
  ForwardOptions options;
  if (model.spec.dropout_rate > 0.0) options.dropout_rng = &dropout_rng;

  std::vector<std::vector<Real>> best(params.size());
  auto snapshot = [&] {
    for (std::size_t k = 0; k < params.size(); ++k) {
      const auto v = params[k].values();
      best[k].assign(v.begin(), v.end());
    }
  };
  snapshot();

  TrainResult result;
  result.best_val_rmse_m = INFINITY;
  std::vector<std::size_t> order(train_set.size());
  const Predictor predict = model_predictor(model);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[shuffle.uniform_index(i + 1)]);

    // Indexed by sequence so the epoch loss does not depend on the shuffle.
    std::vector<double> losses(order.size(), 0.0);
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const Real weight = Real(1) / static_cast<Real>(end - start);
      for (Tensor<Real>& p : params) p.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const Sequence& s = train_set[order[b]];
        const Tensor<Real> loss = mse_loss(model.forward(features_tensor<Real>(s), options), target_tensor<Real>(s));
        const double value = static_cast<double>(loss.item());
        if (!std::isfinite(value)) {
          throw DivergenceError(epoch, batch_index + 1,
                                "training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(batch_index + 1));
        }
        losses[order[b]] = value;
        backward(scale(loss, weight));
      }
      adam_step<Real>(params, adam);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(order.size());
    record.val_rmse_m = score_sequences(predict, validation, stats).rmse();
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);

    if (record.val_rmse_m < result.best_val_rmse_m) {
      result.best_val_rmse_m = record.val_rmse_m;
      result.best_epoch = epoch;
      snapshot();
    } else if (epoch - result.best_epoch >= cfg.patience) {
      result.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto v = params[k].mutable_values();
    std::copy(best[k].begin(), best[k].end(), v.begin());
    params[k].zero_grad();
  }
  return result;
}

template <typename Real>
TrainResult train(HybridModel<Real>& model, const DatasetBundle& bundle, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  return train(model, std::span<const Sequence>(bundle.split(Split::Train)),
               std::span<const Sequence>(bundle.split(Split::Validation)), bundle.stats, cfg, on_epoch);
}

#define HRGC_INSTANTIATE_TRAIN(Real)                                                                       \
  template TrainResult train<Real>(HybridModel<Real>&, std::span<const Sequence>, std::span<const Sequence>, \
                                   const Standardization&, const TrainConfig&, const EpochCallback&);      \
  template TrainResult train<Real>(HybridModel<Real>&, const DatasetBundle&, const TrainConfig&,           \
                                   const EpochCallback&);

HRGC_INSTANTIATE_TRAIN(float)
HRGC_INSTANTIATE_TRAIN(double)

}  // namespace hrgc
