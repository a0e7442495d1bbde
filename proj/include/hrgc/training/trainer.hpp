#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hrgc/data/dataset.hpp"
#include "hrgc/models/hybrid_model.hpp"

namespace hrgc {

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 200;
  // Epochs without a new best validation RMSE before stopping.
  std::size_t patience = 15;
  std::uint64_t seed = 0;
  // Dropout stays off unless explicitly re-enabled here.
  bool allow_dropout = false;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  std::size_t epoch = 0;     // 1-based
  double train_loss = 0.0;   // mean per-sequence MSE, standardized units
  double val_rmse_m = 0.0;   // pooled over all validation positions

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_rmse_m = 0.0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Rows "epoch,train_loss,val_rmse_m".
std::string history_csv(std::span<const EpochRecord> history);

/// Mini-batch MSE training with Adam. Each epoch shuffles the training
/// sequences with a generator derived from cfg.seed, takes one optimizer step
/// per batch, then scores the validation split in meters. The parameters of
/// the best validation epoch are restored before returning. A non-finite
/// loss raises DivergenceError; `on_epoch` has by then seen every completed
/// epoch.
template <typename Real>
TrainResult train(HybridModel<Real>& model, std::span<const Sequence> train_set, std::span<const Sequence> validation,
                  const Standardization& stats, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

template <typename Real>
TrainResult train(HybridModel<Real>& model, const DatasetBundle& bundle, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace hrgc
