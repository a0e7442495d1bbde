#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hrgc/data/dataset.hpp"
#include "hrgc/errors.hpp"
#include "hrgc/training/evaluation.hpp"
#include "hrgc/training/metrics.hpp"
#include "hrgc/training/trainer.hpp"
#include "support/oracles.hpp"

namespace hrgc {
namespace {

const DatasetBundle& tiny_bundle() {
  static const DatasetBundle bundle = [] {
    AugmentationPlan plan;
    plan.noisy_copies = 2;
    plan.downsample_pairs = 1;
    plan.sequence_length = 32;
    return build_dataset(preprocess_all(synthesize_batch(SynthesisPlan{}, 5, 17)), plan, 2);
  }();
  return bundle;
}

ModelSpec small_spec(Variant v) {
  ModelSpec s;
  s.variant = v;
  s.d_model = 8;
  s.lstm_hidden = 8;
  s.num_heads = 2;
  s.d_ff = 16;
  s.sequence_length = 32;
  return s;
}

TrainConfig quick_config(std::size_t epochs = 4) {
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 4;
  cfg.max_epochs = epochs;
  cfg.patience = epochs - 1;
  cfg.seed = 5;
  return cfg;
}

std::vector<std::vector<double>> snapshot(const HybridModel<double>& m) {
  std::vector<std::vector<double>> out;
  for (const auto& p : m.parameters()) out.emplace_back(p.values().begin(), p.values().end());
  return out;
}

TEST(MetricsTest, WorkedExample) {
  const std::vector<double> pred = {3, 4};
  const std::vector<double> truth = {0, 0};
  EXPECT_NEAR(rmse(pred, truth), 3.5355339, 5e-8);
  EXPECT_EQ(mae(pred, truth), 3.5);
  EXPECT_EQ(rmse(pred, pred), 0.0);
  EXPECT_EQ(mae(pred, pred), 0.0);
}

TEST(MetricsTest, Preconditions) {
  const std::vector<double> a = {1, 2};
  const std::vector<double> b = {1};
  EXPECT_THROW(rmse(a, b), ContractError);
  EXPECT_THROW(mae(std::vector<double>{}, std::vector<double>{}), ContractError);
}

TEST(MetricsTest, MatchesNaiveLoopsAndPowerMeanOrder) {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(40);
    std::vector<double> a(n);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(-3, 3);
      b[i] = rng.uniform(-3, 3);
    }
    EXPECT_NEAR(rmse(a, b), oracle::rmse(a, b), 1e-12);
    EXPECT_NEAR(mae(a, b), oracle::mae(a, b), 1e-12);
    EXPECT_LE(mae(a, b), rmse(a, b) + 1e-15);
  }
}

TEST(MetricsTest, AccumulatorPoolsPositions) {
  const std::vector<double> p1 = {1, 2, 3};
  const std::vector<double> t1 = {0, 2, 5};
  const std::vector<double> p2 = {4};
  const std::vector<double> t2 = {1};
  ErrorAccumulator a;
  a.add(p1, t1);
  ErrorAccumulator b;
  b.add(p2, t2);
  a.merge(b);
  const std::vector<double> p = {1, 2, 3, 4};
  const std::vector<double> t = {0, 2, 5, 1};
  EXPECT_NEAR(a.rmse(), rmse(p, t), 1e-15);
  EXPECT_NEAR(a.mae(), mae(p, t), 1e-15);
  EXPECT_EQ(a.count, 4u);
}

TEST(StandardizationTest, TargetRoundTrip) {
  Standardization s = Standardization::identity();
  s.target_mean = 0.137;
  s.target_std = 0.0421;
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double m = rng.uniform(-1.0, 1.0);
    EXPECT_NEAR(s.destandardize_target(s.standardize_target(m)), m, 1e-10);
  }
  EXPECT_EQ(Standardization::from_json(tiny_bundle().stats.to_json()), tiny_bundle().stats);
}

TEST(StandardizationTest, ConstantChannelGetsUnitScale) {
  AlignedSequence s;
  s.data = Matrix(4, kSequenceColumns, 2.0);
  const Standardization st = Standardization::fit(std::vector<AlignedSequence>{s});
  for (double sd : st.feature_stds) EXPECT_EQ(sd, 1.0);
  EXPECT_EQ(st.feature_means[0], 2.0);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig cfg;
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.patience = cfg.max_epochs;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_EQ(TrainConfig::from_json(quick_config().to_json()).to_json(), quick_config().to_json());
  EXPECT_THROW(TrainConfig::from_json(nlohmann::json{{"lr", 1}}), ConfigError);
  EXPECT_EQ(TrainConfig{}.learning_rate, 1e-4);
  EXPECT_EQ(TrainConfig{}.batch_size, 32u);
}

TEST(TrainerTest, RunsAreBitIdentical) {
  auto a = HybridModel<double>::build(small_spec(Variant::LstmThenTransformer), 3);
  auto b = HybridModel<double>::build(small_spec(Variant::LstmThenTransformer), 3);
  const TrainResult ra = train(a, tiny_bundle(), quick_config());
  const TrainResult rb = train(b, tiny_bundle(), quick_config());
  EXPECT_EQ(ra.history, rb.history);
  EXPECT_EQ(snapshot(a), snapshot(b));
}

TEST(TrainerTest, BestValidationParametersAreRestored) {
  auto m = HybridModel<double>::build(small_spec(Variant::ParallelLstmTransformer), 4);
  std::vector<EpochRecord> seen;
  const TrainResult r = train(m, tiny_bundle(), quick_config(6), [&](const EpochRecord& e) { seen.push_back(e); });
  EXPECT_EQ(seen, r.history);
  const MetricsReport report = evaluate(model_predictor(m), tiny_bundle(), "m");
  const double val = report.rows[1].rmse_m;
  EXPECT_EQ(report.rows[1].split, "validation");
  for (const EpochRecord& e : r.history) EXPECT_LE(val, e.val_rmse_m + 1e-12);
  EXPECT_NEAR(val, r.best_val_rmse_m, 1e-12);
}

TEST(TrainerTest, ZeroLearningRateLeavesParametersAndLossFixed) {
  auto m = HybridModel<double>::build(small_spec(Variant::TransformerThenLstm), 6);
  const auto before = snapshot(m);
  TrainConfig cfg = quick_config(3);
  cfg.learning_rate = 0.0;
  const TrainResult r = train(m, tiny_bundle(), cfg);
  EXPECT_EQ(snapshot(m), before);
  for (const EpochRecord& e : r.history) {
    EXPECT_EQ(e.train_loss, r.history[0].train_loss);
    EXPECT_EQ(e.val_rmse_m, r.history[0].val_rmse_m);
  }
}

TEST(TrainerTest, EarlyStoppingHonoursPatience) {
  auto m = HybridModel<double>::build(small_spec(Variant::LstmThenTransformer), 7);
  TrainConfig cfg = quick_config(10);
  cfg.learning_rate = 0.0;
  cfg.patience = 2;
  const TrainResult r = train(m, tiny_bundle(), cfg);
  EXPECT_EQ(r.best_epoch, 1u);
  EXPECT_EQ(r.history.size(), 3u);
  EXPECT_TRUE(r.stopped_early);
}

TEST(TrainerTest, DropoutNeedsExplicitOptIn) {
  ModelSpec s = small_spec(Variant::LstmThenTransformer);
  s.dropout_rate = 0.1;
  auto m = HybridModel<double>::build(s, 8);
  EXPECT_THROW(train(m, tiny_bundle(), quick_config(2)), ConfigError);
  TrainConfig cfg = quick_config(2);
  cfg.allow_dropout = true;
  EXPECT_NO_THROW(train(m, tiny_bundle(), cfg));
}

TEST(TrainerTest, NonFiniteLossReportsEpochAndBatch) {
  auto m = HybridModel<double>::build(small_spec(Variant::LstmThenTransformer), 9);
  Tensor<double> bias = m.head.bias;
  bias.mutable_values()[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    train(m, tiny_bundle(), quick_config(2));
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 1u);
    EXPECT_EQ(e.batch(), 1u);
  }
}

TEST(TrainerTest, HistoryCsvLayout) {
  const std::vector<EpochRecord> h = {{1, 0.5, 0.25}, {2, 0.125, 0.0625}};
  EXPECT_EQ(history_csv(h), "epoch,train_loss,val_rmse_m\n1,0.5,0.25\n2,0.125,0.0625\n");
}

TEST(EvaluationTest, OracleScoresZero) {
  const MetricsReport r = evaluate(oracle_predictor(), tiny_bundle(), "oracle");
  ASSERT_EQ(r.rows.size(), 3u);
  for (const MetricsRow& row : r.rows) {
    EXPECT_EQ(row.rmse_m, 0.0);
    EXPECT_EQ(row.mae_m, 0.0);
  }
}

TEST(EvaluationTest, ZeroModelScoresTargetRootMeanSquare) {
  const DatasetBundle& b = tiny_bundle();
  const MetricsReport r = evaluate(zero_predictor(b.stats), b, "zero");
  for (std::size_t s = 0; s < 3; ++s) {
    double sq = 0.0;
    double abs = 0.0;
    std::size_t n = 0;
    for (const Sequence& q : b.splits[s]) {
      for (double z : q.target) {
        const double meters = z * b.stats.target_std + b.stats.target_mean;
        sq += meters * meters;
        abs += std::abs(meters);
        ++n;
      }
    }
    EXPECT_NEAR(r.rows[s].rmse_m, std::sqrt(sq / n), 1e-12);
    EXPECT_NEAR(r.rows[s].mae_m, abs / n, 1e-12);
    EXPECT_LE(r.rows[s].mae_m, r.rows[s].rmse_m);
  }
}

TEST(EvaluationTest, EmptySplitIsContractError) {
  DatasetBundle b = tiny_bundle();
  b.split(Split::Test).clear();
  EXPECT_THROW(evaluate(oracle_predictor(), b, "oracle"), ContractError);
}

TEST(EvaluationTest, SplitTableLayout) {
  MetricsReport r = evaluate(oracle_predictor(), tiny_bundle(), "Model 2");
  r.append(evaluate(zero_predictor(tiny_bundle().stats), tiny_bundle(), "zero"));
  const std::string csv = r.split_table_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "model,train_rmse_m,train_mae_m,validation_rmse_m,validation_mae_m,test_rmse_m,test_mae_m");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_NE(csv.find("\nModel 2,0,0,0,0,0,0\n"), std::string::npos) << csv;
}

std::vector<AlignedSequence> heldout_set() {
  return preprocess_all(synthesize_batch(SynthesisPlan{}, 3, 17, 500));
}

TEST(GeneralizationTest, FactorOneEqualsPlainEvaluation) {
  const auto held = heldout_set();
  const std::vector<std::size_t> factors = {1, 2};
  const auto predict = zero_predictor(tiny_bundle().stats);
  const MetricsReport r = generalization_eval(predict, held, tiny_bundle().source_ids(), tiny_bundle().stats, 32,
                                              factors, "zero");
  ASSERT_EQ(r.rows.size(), 2u);
  std::vector<Sequence> plain;
  for (const AlignedSequence& h : held) plain.push_back(to_model_sequence(h, tiny_bundle().stats, 32, h.source_id));
  EXPECT_EQ(r.rows[0].rmse_m, score_sequences(predict, plain, tiny_bundle().stats).rmse());
  EXPECT_EQ(r.rows[0].downsample, 1u);
  EXPECT_EQ(r.rows[1].downsample, 2u);

  const std::string table = r.generalization_table_csv();
  EXPECT_EQ(table.substr(0, table.find('\n')), "downsampling_factor,model,rmse_m,mae_m");
  EXPECT_NE(table.find("\n-,zero,"), std::string::npos);
  EXPECT_NE(table.find("\n2,zero,"), std::string::npos);
}

TEST(GeneralizationTest, FactorTwoHalvesBeforeResampling) {
  AlignedSequence s;
  s.source_id = "H";
  s.data = Matrix(100, kSequenceColumns);
  for (std::size_t i = 0; i < 100; ++i) s.data(i, kTargetColumn) = static_cast<double>(i * i);
  const auto seqs = heldout_sequences(std::vector<AlignedSequence>{s}, Standardization::identity(), 50, 2);
  ASSERT_EQ(seqs.size(), 1u);
  // 50 kept rows resampled to 50 is the identity, so the target is rows 0, 2, ..., 98.
  for (std::size_t k = 0; k < 50; ++k) EXPECT_NEAR(seqs[0].target[k], static_cast<double>(4 * k * k), 1e-9);
}

TEST(GeneralizationTest, LeakageNamesTheSource) {
  auto held = heldout_set();
  held[1].source_id = tiny_bundle().split_sources[0].front();
  const std::vector<std::size_t> factors = {1};
  try {
    generalization_eval(oracle_predictor(), held, tiny_bundle().source_ids(), tiny_bundle().stats, 32, factors, "o");
    FAIL() << "expected LeakageError";
  } catch (const ContractError& e) {
    EXPECT_NE(dynamic_cast<const LeakageError*>(&e), nullptr);
    EXPECT_NE(std::string(e.what()).find(held[1].source_id), std::string::npos);
  }
}

}  // namespace
}  // namespace hrgc
