#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "hrgc/cli/app.hpp"

namespace fs = std::filesystem;
using hrgc::cli::kExitDomain;
using hrgc::cli::kExitOk;
using hrgc::cli::kExitUsage;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = hrgc::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> cells_of(const std::string& line) {
  std::vector<std::string> cells;
  std::istringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) cells.push_back(cell);
  return cells;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hrgc_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<fs::path> csvs_in(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// Small bundle (5 sources, 32-step sequences), a held-out raw directory and one
// trained Model 2 checkpoint shared by the pipeline tests.
class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fresh_dir("pipeline");
    const nlohmann::json plan = {{"noisy_copies", 2},        {"downsample_pairs", 1},
                                 {"split_ratios", {0.6, 0.2, 0.2}}, {"sequence_length", 32},
                                 {"noise_range_fraction", 0.04}, {"noise_truncation_sds", 2.0}};
    write_file(root_ / "plan.json", plan.dump());
    ASSERT_EQ(invoke({"synth", "--count", "5", "--out", (root_ / "raw").string(), "--seed", "3"}).code, kExitOk);
    ASSERT_EQ(invoke({"synth", "--count", "3", "--out", (root_ / "heldout").string(), "--seed", "3", "--first-index",
                      "100"})
                  .code,
              kExitOk);
    ASSERT_EQ(invoke({"prepare", "--raw", (root_ / "raw").string(), "--out", (root_ / "bundle").string(), "--config",
                      (root_ / "plan.json").string(), "--seed", "4"})
                  .code,
              kExitOk);
    const Outcome t = invoke(tiny_train("2", root_ / "m2.ckpt", {"--epochs", "2", "--lr", "1e-3"}));
    ASSERT_EQ(t.code, kExitOk) << t.err;
  }

  static std::vector<std::string> tiny_train(const std::string& variant, const fs::path& out,
                                             const std::vector<std::string>& extra) {
    std::vector<std::string> args = {"train",   "--bundle", (root_ / "bundle").string(),
                                     "--variant", variant,  "--out",
                                     out.string(), "--d-model", "4",
                                     "--lstm-hidden", "4", "--heads",
                                     "2",       "--d-ff",   "8",
                                     "--batch", "4",        "--seed",
                                     "5"};
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
  }

  static fs::path root_;
};

fs::path PipelineTest::root_;

}  // namespace

TEST(CliExitCodes, VersionPrintsAndSucceeds) {
  const Outcome r = invoke({"--version"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find(hrgc::cli::version()), std::string::npos);
}

TEST(CliExitCodes, UsageErrorsReturnTwo) {
  EXPECT_EQ(invoke({}).code, kExitUsage);
  EXPECT_EQ(invoke({"bogus"}).code, kExitUsage);
  EXPECT_EQ(invoke({"synth", "--out", "x"}).code, kExitUsage);
  EXPECT_EQ(invoke({"train", "--bundle", "b", "--variant", "2", "--out", "o", "--precision", "f16"}).code, kExitUsage);
}

TEST(CliSynth, ZeroCountWritesOnlyTheManifest) {
  const fs::path dir = fresh_dir("synth0");
  const Outcome r = invoke({"synth", "--count", "0", "--out", (dir / "raw").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir / "raw")) names.push_back(e.path().filename().string());
  EXPECT_EQ(names, std::vector<std::string>{"run_manifest.json"});
  const auto m = nlohmann::json::parse(slurp(dir / "raw" / "run_manifest.json"));
  EXPECT_EQ(m.at("command"), "synth");
  EXPECT_EQ(m.at("results").at("records"), 0);
  EXPECT_EQ(m.at("tool_version"), hrgc::cli::version());
}

TEST(CliSynth, WritesOneFilePerRecordNamedById) {
  const fs::path dir = fresh_dir("synth3");
  ASSERT_EQ(invoke({"synth", "--count", "3", "--out", dir.string(), "--first-index", "7"}).code, kExitOk);
  const auto files = csvs_in(dir);
  ASSERT_EQ(files.size(), 3u);
  EXPECT_EQ(files[0].filename().string(), "HRGC-0007.csv");
  EXPECT_EQ(files[2].filename().string(), "HRGC-0009.csv");
}

TEST(CliPrepare, TooFewSourcesIsADomainError) {
  const fs::path dir = fresh_dir("prep2");
  ASSERT_EQ(invoke({"synth", "--count", "2", "--out", (dir / "raw").string()}).code, kExitOk);
  const Outcome r = invoke({"prepare", "--raw", (dir / "raw").string(), "--out", (dir / "bundle").string()});
  EXPECT_EQ(r.code, kExitDomain);
  EXPECT_NE(r.err.find("at least 3"), std::string::npos) << r.err;
}

TEST(CliPrepare, MissingRawDirectoryIsAnIoError) {
  const fs::path dir = fresh_dir("prepmissing");
  const Outcome r = invoke({"prepare", "--raw", (dir / "nope").string(), "--out", (dir / "bundle").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("nope"), std::string::npos);
}

TEST(CliPrepare, MalformedConfigIsAConfigError) {
  const fs::path dir = fresh_dir("prepconfig");
  write_file(dir / "plan.json", "{not json");
  const Outcome r = invoke({"prepare", "--raw", dir.string(), "--out", (dir / "b").string(), "--config",
                            (dir / "plan.json").string()});
  EXPECT_EQ(r.code, kExitDomain);
  EXPECT_NE(r.err.find("malformed JSON"), std::string::npos);
}

TEST(CliEval, MissingCheckpointNamesThePath) {
  const fs::path dir = fresh_dir("evalmissing");
  const std::string ckpt = (dir / "absent.ckpt").string();
  const Outcome r = invoke({"eval", "--checkpoint", ckpt, "--bundle", dir.string(), "--out", "-"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find(ckpt), std::string::npos) << r.err;
}

TEST(CliEval, NeedsExactlyOneModelSource) {
  EXPECT_EQ(invoke({"eval", "--bundle", "b", "--out", "-"}).code, kExitDomain);
  EXPECT_EQ(invoke({"eval", "--checkpoint", "c", "--baseline", "zero", "--bundle", "b", "--out", "-"}).code,
            kExitDomain);
}

TEST_F(PipelineTest, TrainWritesCheckpointHistoryAndManifest) {
  ASSERT_TRUE(fs::exists(root_ / "m2.ckpt"));
  const auto history = lines_of(slurp(root_ / "m2.ckpt.history.csv"));
  ASSERT_EQ(history.size(), 3u);
  EXPECT_EQ(history[0], "epoch,train_loss,val_rmse_m");
  EXPECT_EQ(cells_of(history[1])[0], "1");
  const auto m = nlohmann::json::parse(slurp(root_ / "m2.ckpt.run.json"));
  EXPECT_EQ(m.at("command"), "train");
  EXPECT_EQ(m.at("results").at("epochs_run"), 2);
  EXPECT_EQ(m.at("config").at("precision"), "f32");
}

TEST_F(PipelineTest, ZeroLearningRateGivesAConstantHistory) {
  const Outcome r = invoke(tiny_train("3", root_ / "lr0.ckpt", {"--epochs", "3", "--lr", "0"}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto history = lines_of(slurp(root_ / "lr0.ckpt.history.csv"));
  ASSERT_EQ(history.size(), 4u);
  for (std::size_t i = 2; i < history.size(); ++i) {
    EXPECT_EQ(cells_of(history[i])[1], cells_of(history[1])[1]);
    EXPECT_EQ(cells_of(history[i])[2], cells_of(history[1])[2]);
  }
}

TEST_F(PipelineTest, VariantAliasSelectsTheSameModel) {
  const Outcome r = invoke(tiny_train("1", root_ / "alias.ckpt", {"--epochs", "1"}));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::vector<std::string> args = tiny_train("Transformer-LSTM", root_ / "alias2.ckpt", {"--epochs", "1"});
  const auto it = std::find(args.begin(), args.end(), "--variant");
  *it = "--variant-alias";
  ASSERT_EQ(invoke(args).code, kExitOk);
  EXPECT_EQ(slurp(root_ / "alias.ckpt"), slurp(root_ / "alias2.ckpt"));
}

TEST_F(PipelineTest, DropoutRequiresExplicitOptIn) {
  const Outcome r = invoke(tiny_train("2", root_ / "drop.ckpt", {"--epochs", "1", "--dropout", "0.1"}));
  EXPECT_EQ(r.code, kExitDomain);
  const Outcome ok =
      invoke(tiny_train("2", root_ / "drop.ckpt", {"--epochs", "1", "--dropout", "0.1", "--allow-dropout"}));
  EXPECT_EQ(ok.code, kExitOk) << ok.err;
}

TEST_F(PipelineTest, OracleBaselineScoresZeroEverywhere) {
  const Outcome r = invoke({"eval", "--baseline", "oracle", "--bundle", (root_ / "bundle").string(), "--heldout",
                            (root_ / "heldout").string(), "--downsample", "1,2", "--out", "-"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto lines = lines_of(r.out);
  // Split table header + 1 row, generalization header + 2 rows.
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "model,train_rmse_m,train_mae_m,validation_rmse_m,validation_mae_m,test_rmse_m,test_mae_m");
  const auto split_row = cells_of(lines[1]);
  ASSERT_EQ(split_row.size(), 7u);
  EXPECT_EQ(split_row[0], "Oracle");
  for (std::size_t c = 1; c < 7; ++c) EXPECT_EQ(std::stod(split_row[c]), 0.0) << lines[1];
  EXPECT_EQ(lines[2], "downsampling_factor,model,rmse_m,mae_m");
  for (std::size_t i = 3; i < 5; ++i) {
    const auto row = cells_of(lines[i]);
    EXPECT_EQ(std::stod(row[2]), 0.0);
    EXPECT_EQ(std::stod(row[3]), 0.0);
  }
  EXPECT_EQ(cells_of(lines[3])[0], "-");
  EXPECT_EQ(cells_of(lines[4])[0], "2");
}

TEST_F(PipelineTest, CheckpointEvalWritesBothTables) {
  const fs::path prefix = root_ / "eval_m2";
  const Outcome r = invoke({"eval", "--checkpoint", (root_ / "m2.ckpt").string(), "--bundle",
                            (root_ / "bundle").string(), "--heldout", (root_ / "heldout").string(), "--downsample",
                            "1,2", "--out", prefix.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto t2 = lines_of(slurp(prefix.string() + ".splits.csv"));
  ASSERT_EQ(t2.size(), 2u);
  EXPECT_EQ(cells_of(t2[1])[0], "Model 2");
  const auto t3 = lines_of(slurp(prefix.string() + ".generalization.csv"));
  ASSERT_EQ(t3.size(), 3u);
  EXPECT_EQ(cells_of(t3[1])[1], "Model 2");
  EXPECT_GT(std::stod(cells_of(t3[1])[2]), 0.0);
  EXPECT_TRUE(fs::exists(prefix.string() + ".metrics.json"));
  EXPECT_TRUE(fs::exists(prefix.string() + ".run.json"));
}

TEST_F(PipelineTest, HeldoutOverlappingTrainingSourcesIsRejected) {
  const Outcome r = invoke({"eval", "--checkpoint", (root_ / "m2.ckpt").string(), "--heldout",
                            (root_ / "raw").string(), "--out", "-"});
  EXPECT_EQ(r.code, kExitDomain);
  EXPECT_NE(r.err.find("HRGC-"), std::string::npos) << r.err;
}

TEST_F(PipelineTest, PredictIsRepeatableAndMatchesModelLength) {
  const fs::path input = csvs_in(root_ / "bundle" / "aligned").front();
  const fs::path a = root_ / "pred_a.csv";
  const fs::path b = root_ / "pred_b.csv";
  const std::string ckpt = (root_ / "m2.ckpt").string();
  ASSERT_EQ(invoke({"predict", "--checkpoint", ckpt, "--input", input.string(), "--out", a.string()}).code, kExitOk);
  ASSERT_EQ(invoke({"predict", "--checkpoint", ckpt, "--input", input.string(), "--out", b.string()}).code, kExitOk);
  EXPECT_EQ(slurp(a), slurp(b));
  const auto lines = lines_of(slurp(a));
  ASSERT_EQ(lines.size(), 33u);
  EXPECT_EQ(lines[0], "position_m,predicted_m,ground_truth_m");
  EXPECT_EQ(cells_of(lines[1])[0], "0");
}

TEST_F(PipelineTest, PredictWithoutTruthOmitsTheColumnAndSaysSo) {
  const fs::path input = csvs_in(root_ / "bundle" / "aligned").front();
  std::string stripped;
  for (const std::string& line : lines_of(slurp(input))) {
    stripped += (line.rfind('#', 0) == 0 ? line : line.substr(0, line.rfind(','))) + "\n";
  }
  const fs::path no_truth = root_ / "no_truth.csv";
  write_file(no_truth, stripped);
  const Outcome r =
      invoke({"predict", "--checkpoint", (root_ / "m2.ckpt").string(), "--input", no_truth.string(), "--out", "-"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto lines = lines_of(r.out);
  ASSERT_EQ(lines.size(), 33u);
  EXPECT_EQ(lines[0], "position_m,predicted_m");
  EXPECT_EQ(cells_of(lines[5]).size(), 2u);
  EXPECT_NE(r.err.find("ground truth omitted"), std::string::npos);
}
