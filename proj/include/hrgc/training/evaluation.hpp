#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hrgc/data/dataset.hpp"
#include "hrgc/models/hybrid_model.hpp"
#include "hrgc/training/metrics.hpp"

namespace hrgc {

// Maps one model-ready sequence to standardized predictions, one per row.
using Predictor = std::function<std::vector<double>(const Sequence&)>;

template <typename Real>
Predictor model_predictor(const HybridModel<Real>& model);
// Returns the stored targets.
Predictor oracle_predictor();
// Predicts 0 m everywhere.
Predictor zero_predictor(const Standardization& stats);

// Pooled metrics in meters over every position of every sequence. Sequences
// are scored in parallel; the result does not depend on the thread count.
ErrorAccumulator score_sequences(const Predictor& predict, std::span<const Sequence> sequences,
                                 const Standardization& stats);

struct MetricsRow {
  std::string model;
  std::string split;                       // "train", "validation", "test" or "heldout"
  std::optional<std::size_t> downsample;   // set for held-out rows
  double rmse_m = 0.0;
  double mae_m = 0.0;
  std::size_t sequences = 0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;

  void append(const MetricsReport& other);
  // One line per model: model,train_rmse_m,train_mae_m,validation_rmse_m,...
  std::string split_table_csv() const;
  // One line per (factor, model): downsampling_factor,model,rmse_m,mae_m
  // with "-" for factor 1.
  std::string generalization_table_csv() const;
  nlohmann::json to_json() const;
};

// Rows for train, validation and test. ContractError on an empty split.
MetricsReport evaluate(const Predictor& predict, const DatasetBundle& bundle, const std::string& model);

/// Held-out protocol: for each factor keep every f-th row, resample to
/// `length`, standardize with `stats` and score. LeakageError if a held-out
/// source id is among `training_sources`.
MetricsReport generalization_eval(const Predictor& predict, std::span<const AlignedSequence> heldout,
                                  const std::set<std::string>& training_sources, const Standardization& stats,
                                  std::size_t length, std::span<const std::size_t> factors, const std::string& model);

// Model-ready held-out sequences at one factor.
std::vector<Sequence> heldout_sequences(std::span<const AlignedSequence> heldout, const Standardization& stats,
                                        std::size_t length, std::size_t factor);

}  // namespace hrgc
