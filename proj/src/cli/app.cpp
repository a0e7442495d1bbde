#include "hrgc/cli/app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "hrgc/data/csv.hpp"
#include "hrgc/data/dataset.hpp"
#include "hrgc/data/scene.hpp"
#include "hrgc/errors.hpp"
#include "hrgc/models/checkpoint.hpp"
#include "hrgc/numerics/parallel.hpp"
#include "hrgc/training/evaluation.hpp"
#include "hrgc/training/trainer.hpp"

#ifndef HRGC_VERSION_STRING
#define HRGC_VERSION_STRING "0.0.0"
#endif

namespace hrgc::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": malformed JSON (" + e.what() + ")");
  }
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

fs::path with_suffix(const fs::path& base, const std::string& suffix) {
  fs::path p = base;
  p += suffix;
  return p;
}

// Sorted *.csv files of a directory.
std::vector<fs::path> csv_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<RawCrossingRecord> read_records(const fs::path& dir) {
  std::vector<RawCrossingRecord> records;
  for (const fs::path& f : csv_files(dir)) records.push_back(ingest_raw_record(f));
  return records;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// A checkpoint loaded in the precision it was trained in.
struct LoadedModel {
  ModelSpec spec;
  nlohmann::json metadata;
  Predictor predict;
};

LoadedModel load_model(const fs::path& path) {
  Checkpoint<double> ck = load_checkpoint<double>(path);
  LoadedModel out;
  out.spec = ck.model.spec;
  out.metadata = ck.metadata.is_null() ? nlohmann::json::object() : ck.metadata;
  if (out.metadata.value("precision", std::string("f64")) == "f32") {
    HybridModel<float> model = HybridModel<float>::build(ck.model.spec, 0);
    const auto src = ck.model.parameters();
    auto dst = model.parameters();
    for (std::size_t k = 0; k < dst.size(); ++k) {
      auto values = dst[k].mutable_values();
      const auto from = src[k].values();
      for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<float>(from[i]);
    }
    out.predict = model_predictor(model);
  } else {
    out.predict = model_predictor(ck.model);
  }
  return out;
}

std::optional<Standardization> checkpoint_stats(const LoadedModel& m) {
  if (!m.metadata.contains("standardization")) return std::nullopt;
  return Standardization::from_json(m.metadata.at("standardization"));
}

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path == "-") {
    out << text;
  } else {
    write_text_file(out_path, text);
  }
}

// ---- synth ---------------------------------------------------------------

struct SynthOptions {
  std::size_t count = 0;
  std::string out;
  std::string config;
  std::uint64_t seed = 0;
  std::size_t first_index = 0;
};

int cmd_synth(const SynthOptions& o, RunManifest& manifest, std::ostream& err) {
  SynthesisPlan plan;
  if (!o.config.empty()) {
    plan = SynthesisPlan::from_json(read_json(o.config));
    manifest.inputs.push_back(o.config);
  }
  plan.validate();
  manifest.config = plan.to_json();
  manifest.config["first_index"] = o.first_index;
  ensure_directory(o.out);
  std::vector<std::string> written(o.count);
  parallel_for(o.count, [&](std::size_t i) {
    const RawCrossingRecord rec = synthesize_crossing(scene_for_index(plan, o.seed, o.first_index + i));
    const fs::path path = fs::path(o.out) / (rec.crossing_id + ".csv");
    export_raw_record(rec, path);
    written[i] = path.string();
  });
  manifest.outputs = written;
  manifest.results = {{"records", o.count}};
  err << "synth: wrote " << o.count << " record(s) to " << o.out << "\n";
  return kExitOk;
}

// ---- prepare -------------------------------------------------------------

struct PrepareOptions {
  std::string raw;
  std::string out;
  std::string config;
  std::uint64_t seed = 0;
};

int cmd_prepare(const PrepareOptions& o, RunManifest& manifest, std::ostream& err) {
  AugmentationPlan plan;
  if (!o.config.empty()) {
    plan = AugmentationPlan::from_json(read_json(o.config));
    manifest.inputs.push_back(o.config);
  }
  plan.validate();
  manifest.config = plan.to_json();
  const std::vector<RawCrossingRecord> records = read_records(o.raw);
  manifest.inputs.push_back(o.raw);
  if (records.size() < 3) {
    throw ContractError("at least 3 sources required, found " + std::to_string(records.size()) + " in " + o.raw);
  }
  const std::vector<AlignedSequence> aligned = preprocess_all(records);
  const DatasetBundle bundle = build_dataset(aligned, plan, o.seed);

  save_bundle(bundle, o.out);
  const fs::path aligned_dir = fs::path(o.out) / "aligned";
  ensure_directory(aligned_dir);
  for (const AlignedSequence& a : aligned) export_sequence(a, aligned_dir / (a.source_id + ".csv"));

  for (const char* name : {"manifest.json", "train.csv", "validation.csv", "test.csv"}) {
    manifest.outputs.push_back((fs::path(o.out) / name).string());
  }
  manifest.outputs.push_back(aligned_dir.string());
  const auto counts = bundle.split_counts();
  manifest.results = bundle.manifest();
  manifest.results.erase("standardization");
  err << "prepare: " << records.size() << " sources -> " << bundle.total_children() << " children (train "
      << counts[0] << ", validation " << counts[1] << ", test " << counts[2] << ")\n";
  return kExitOk;
}

// ---- train ---------------------------------------------------------------

struct TrainOptions {
  std::string bundle;
  std::string variant;
  std::string out;
  std::string config;
  std::uint64_t seed = 0;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> batch;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> d_model;
  std::optional<std::size_t> lstm_hidden;
  std::optional<std::size_t> heads;
  std::optional<std::size_t> d_ff;
  std::optional<std::size_t> blocks;
  std::optional<double> dropout;
  bool allow_dropout = false;
  bool full_scale = false;
  std::string precision = "f32";
};

template <typename Real>
int train_with(const TrainOptions& o, const ModelSpec& spec, const TrainConfig& cfg, const DatasetBundle& bundle,
               RunManifest& manifest, std::ostream& err) {
  HybridModel<Real> model = HybridModel<Real>::build(spec, o.seed);
  const fs::path history_path = with_suffix(o.out, ".history.csv");
  std::ofstream history(history_path, std::ios::binary | std::ios::trunc);
  if (!history) throw IoError("cannot write " + history_path.string());
  history << "epoch,train_loss,val_rmse_m\n" << std::flush;

  TrainResult result;
  try {
    result = train(model, bundle, cfg, [&](const EpochRecord& r) {
      history << r.epoch << ',' << format_real(r.train_loss) << ',' << format_real(r.val_rmse_m) << '\n' << std::flush;
    });
  } catch (const DivergenceError&) {
    history.flush();
    throw;
  }
  if (!history) throw IoError("write failed for " + history_path.string());

  nlohmann::json metadata = {
      {"precision", o.precision},
      {"standardization", bundle.stats.to_json()},
      {"train_config", cfg.to_json()},
      {"sources", bundle.source_ids()},
      {"best_epoch", result.best_epoch},
      {"best_val_rmse_m", result.best_val_rmse_m},
  };
  save_checkpoint(model, o.out, metadata);
  manifest.outputs = {o.out, history_path.string()};
  manifest.results = {{"param_count", model.param_count()},
                      {"epochs_run", result.history.size()},
                      {"best_epoch", result.best_epoch},
                      {"best_val_rmse_m", result.best_val_rmse_m},
                      {"stopped_early", result.stopped_early}};
  err << "train: " << variant_label(spec.variant) << " (" << model.param_count() << " parameters), best epoch "
      << result.best_epoch << " of " << result.history.size() << ", validation RMSE "
      << format_real(result.best_val_rmse_m) << " m\n";
  return kExitOk;
}

int cmd_train(const TrainOptions& o, RunManifest& manifest, std::ostream& err) {
  const Variant variant = parse_variant(o.variant);
  ModelSpec spec = o.full_scale ? ModelSpec::full_scale(variant) : ModelSpec::desk(variant);
  if (!o.config.empty()) {
    spec = ModelSpec::from_json(read_json(o.config));
    spec.variant = variant;
    manifest.inputs.push_back(o.config);
  }
  if (o.d_model) spec.d_model = *o.d_model;
  if (o.lstm_hidden) spec.lstm_hidden = *o.lstm_hidden;
  if (o.heads) spec.num_heads = *o.heads;
  if (o.d_ff) spec.d_ff = *o.d_ff;
  if (o.blocks) spec.num_encoder_blocks = *o.blocks;
  if (o.dropout) spec.dropout_rate = *o.dropout;

  TrainConfig cfg;
  cfg.seed = o.seed;
  cfg.allow_dropout = o.allow_dropout;
  if (o.lr) cfg.learning_rate = *o.lr;
  if (o.batch) cfg.batch_size = *o.batch;
  if (o.epochs) {
    cfg.max_epochs = *o.epochs;
    // Short runs keep a valid default patience.
    if (!o.patience && cfg.max_epochs > 0) cfg.patience = std::min(cfg.patience, cfg.max_epochs - 1);
  }
  if (o.patience) cfg.patience = *o.patience;
  if (o.precision != "f32" && o.precision != "f64") throw ConfigError("precision must be f32 or f64");

  const DatasetBundle bundle = load_bundle(o.bundle);
  manifest.inputs.push_back(o.bundle);
  spec.sequence_length = bundle.plan.sequence_length;
  spec.validate();
  cfg.validate();
  manifest.config = {{"model", spec.to_json()}, {"train", cfg.to_json()}, {"precision", o.precision}};
  return o.precision == "f32" ? train_with<float>(o, spec, cfg, bundle, manifest, err)
                              : train_with<double>(o, spec, cfg, bundle, manifest, err);
}

// ---- eval ----------------------------------------------------------------

struct EvalOptions {
  std::string checkpoint;
  std::string baseline;
  std::string bundle;
  std::string heldout;
  std::vector<std::size_t> downsample = {1, 2};
  std::string out;
};

int cmd_eval(const EvalOptions& o, RunManifest& manifest, std::ostream& out, std::ostream& err) {
  if (o.checkpoint.empty() == o.baseline.empty()) throw ConfigError("eval: give exactly one of --checkpoint or --baseline");
  if (o.bundle.empty() && o.heldout.empty()) throw ConfigError("eval: give --bundle, --heldout or both");

  std::optional<LoadedModel> loaded;
  if (!o.checkpoint.empty()) {
    loaded = load_model(o.checkpoint);
    manifest.inputs.push_back(o.checkpoint);
  }
  std::optional<DatasetBundle> bundle;
  if (!o.bundle.empty()) {
    bundle = load_bundle(o.bundle);
    manifest.inputs.push_back(o.bundle);
  }

  std::optional<Standardization> stats;
  if (loaded) stats = checkpoint_stats(*loaded);
  if (bundle) {
    if (stats && !(*stats == bundle->stats)) {
      throw ConfigError("eval: the checkpoint was trained with different standardization statistics than " + o.bundle);
    }
    stats = bundle->stats;
  }
  if (!stats) throw ConfigError("eval: no standardization statistics (baselines need --bundle)");

  std::string label;
  Predictor predict;
  std::size_t length = 0;
  if (loaded) {
    label = variant_label(loaded->spec.variant);
    predict = loaded->predict;
    length = loaded->spec.sequence_length;
  } else if (o.baseline == "oracle") {
    label = "Oracle";
    predict = oracle_predictor();
  } else if (o.baseline == "zero") {
    label = "Zero";
    predict = zero_predictor(*stats);
  } else {
    throw ConfigError("eval: unknown baseline '" + o.baseline + "' (expected oracle or zero)");
  }
  if (length == 0) length = bundle->plan.sequence_length;

  MetricsReport report;
  if (bundle) report.append(evaluate(predict, *bundle, label));
  if (!o.heldout.empty()) {
    std::set<std::string> seen;
    if (bundle) seen = bundle->source_ids();
    if (loaded && loaded->metadata.contains("sources")) {
      for (const auto& id : loaded->metadata.at("sources")) seen.insert(id.get<std::string>());
    }
    const std::vector<AlignedSequence> heldout = preprocess_all(read_records(o.heldout));
    manifest.inputs.push_back(o.heldout);
    report.append(generalization_eval(predict, heldout, seen, *stats, length, o.downsample, label));
  }

  manifest.config = {{"model", label}, {"downsample", o.downsample}, {"sequence_length", length}};
  manifest.results = report.to_json();
  if (o.out == "-") {
    if (bundle) out << report.split_table_csv();
    if (!o.heldout.empty()) out << report.generalization_table_csv();
    return kExitOk;
  }
  if (bundle) {
    const fs::path p = with_suffix(o.out, ".splits.csv");
    write_text_file(p, report.split_table_csv());
    manifest.outputs.push_back(p.string());
  }
  if (!o.heldout.empty()) {
    const fs::path p = with_suffix(o.out, ".generalization.csv");
    write_text_file(p, report.generalization_table_csv());
    manifest.outputs.push_back(p.string());
  }
  const fs::path json_path = with_suffix(o.out, ".metrics.json");
  write_text_file(json_path, report.to_json().dump(2) + "\n");
  manifest.outputs.push_back(json_path.string());
  err << "eval: " << label << ", " << report.rows.size() << " report row(s) written to " << o.out << ".*\n";
  return kExitOk;
}

// ---- predict -------------------------------------------------------------

struct PredictOptions {
  std::string checkpoint;
  std::string input;
  std::string out;
};

int cmd_predict(const PredictOptions& o, RunManifest& manifest, std::ostream& out, std::ostream& err) {
  const LoadedModel loaded = load_model(o.checkpoint);
  const auto stats = checkpoint_stats(loaded);
  if (!stats) throw ConfigError("predict: checkpoint " + o.checkpoint + " carries no standardization statistics");
  const SequenceFile file = ingest_sequence(o.input);
  manifest.inputs = {o.checkpoint, o.input};
  const std::size_t length = loaded.spec.sequence_length;
  const AlignedSequence resampled = resample_to_length(file.sequence, length);
  const Sequence seq = to_model_sequence(file.sequence, *stats, length, file.sequence.source_id);
  const std::vector<double> z = loaded.predict(seq);

  std::string csv = file.has_target ? "position_m,predicted_m,ground_truth_m\n" : "position_m,predicted_m\n";
  for (std::size_t k = 0; k < length; ++k) {
    csv += format_real(static_cast<double>(k) * resampled.sampling_interval_m);
    csv += "," + format_real(stats->destandardize_target(z[k]));
    if (file.has_target) csv += "," + format_real(resampled.data(k, kTargetColumn));
    csv += "\n";
  }
  emit(csv, o.out, out);
  if (!file.has_target) err << "predict: no wp_profile column in " << o.input << "; ground truth omitted\n";
  manifest.config = {{"sequence_length", length}, {"has_ground_truth", file.has_target}};
  if (o.out != "-") manifest.outputs = {o.out};
  return kExitOk;
}

}  // namespace

std::string version() { return HRGC_VERSION_STRING; }

nlohmann::json RunManifest::to_json() const {
  return {{"command", command}, {"argv", argv},       {"tool_version", version()}, {"seed", seed},
          {"config", config},   {"inputs", inputs},   {"outputs", outputs},        {"results", results},
          {"duration_s", duration_s}};
}

void RunManifest::write(const fs::path& path) const { write_text_file(path, to_json().dump(2) + "\n"); }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic crossing-profile pipeline: synthesize, prepare, train, evaluate, predict.",
               "crossing_profiler"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1, 1);

  SynthOptions synth_opts;
  CLI::App* synth = app.add_subcommand("synth", "Write synthetic raw crossing records");
  synth->add_option("--count", synth_opts.count, "Number of records")->required();
  synth->add_option("--out", synth_opts.out, "Output directory")->required();
  synth->add_option("--config", synth_opts.config, "Synthesis plan JSON");
  synth->add_option("--seed", synth_opts.seed, "Seed");
  synth->add_option("--first-index", synth_opts.first_index, "Index of the first record in the batch");

  PrepareOptions prep_opts;
  CLI::App* prepare = app.add_subcommand("prepare", "Align, augment, split and standardize raw records");
  prepare->add_option("--raw", prep_opts.raw, "Directory of raw record CSVs")->required();
  prepare->add_option("--out", prep_opts.out, "Bundle directory")->required();
  prepare->add_option("--config", prep_opts.config, "Augmentation plan JSON");
  prepare->add_option("--seed", prep_opts.seed, "Seed");

  TrainOptions train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "Train one model variant on a bundle");
  train_cmd->add_option("--bundle", train_opts.bundle, "Bundle directory")->required();
  train_cmd->add_option("--variant,--variant-alias", train_opts.variant, "1, 2, 3 or a variant name/alias")->required();
  train_cmd->add_option("--out", train_opts.out, "Checkpoint path")->required();
  train_cmd->add_option("--config", train_opts.config, "Model spec JSON");
  train_cmd->add_option("--seed", train_opts.seed, "Seed for initialization and shuffling");
  train_cmd->add_option("--epochs", train_opts.epochs, "Maximum epochs");
  train_cmd->add_option("--lr", train_opts.lr, "Learning rate");
  train_cmd->add_option("--batch", train_opts.batch, "Batch size");
  train_cmd->add_option("--patience", train_opts.patience, "Early-stopping patience in epochs");
  train_cmd->add_option("--d-model", train_opts.d_model, "Projection and attention width");
  train_cmd->add_option("--lstm-hidden", train_opts.lstm_hidden, "LSTM hidden width");
  train_cmd->add_option("--heads", train_opts.heads, "Attention heads");
  train_cmd->add_option("--d-ff", train_opts.d_ff, "Feed-forward width");
  train_cmd->add_option("--blocks", train_opts.blocks, "Encoder blocks");
  train_cmd->add_option("--dropout", train_opts.dropout, "Encoder dropout rate (needs --allow-dropout)");
  train_cmd->add_flag("--allow-dropout", train_opts.allow_dropout, "Permit a nonzero dropout rate");
  train_cmd->add_flag("--full-scale", train_opts.full_scale, "Start from the full-size dimensions");
  train_cmd->add_option("--precision", train_opts.precision, "f32 or f64")->check(CLI::IsMember({"f32", "f64"}));

  EvalOptions eval_opts;
  CLI::App* eval = app.add_subcommand("eval", "Score a checkpoint or baseline");
  eval->add_option("--checkpoint", eval_opts.checkpoint, "Checkpoint path");
  eval->add_option("--baseline", eval_opts.baseline, "oracle or zero");
  eval->add_option("--bundle", eval_opts.bundle, "Bundle directory (train/validation/test rows)");
  eval->add_option("--heldout", eval_opts.heldout, "Directory of held-out raw record CSVs");
  eval->add_option("--downsample", eval_opts.downsample, "Down-sampling factors for held-out rows")->delimiter(',');
  eval->add_option("--out", eval_opts.out, "Output prefix, or - for stdout")->required();

  PredictOptions predict_opts;
  CLI::App* predict = app.add_subcommand("predict", "Predict the profile of one sequence CSV");
  predict->add_option("--checkpoint", predict_opts.checkpoint, "Checkpoint path")->required();
  predict->add_option("--input", predict_opts.input, "Sequence CSV")->required();
  predict->add_option("--out", predict_opts.out, "Output CSV, or - for stdout")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  RunManifest manifest;
  manifest.argv = args;
  const auto start = Clock::now();
  std::optional<fs::path> manifest_path;
  try {
    int code = kExitOk;
    if (synth->parsed()) {
      manifest.command = "synth";
      manifest.seed = synth_opts.seed;
      code = cmd_synth(synth_opts, manifest, err);
      manifest_path = fs::path(synth_opts.out) / "run_manifest.json";
    } else if (prepare->parsed()) {
      manifest.command = "prepare";
      manifest.seed = prep_opts.seed;
      code = cmd_prepare(prep_opts, manifest, err);
      manifest_path = fs::path(prep_opts.out) / "run_manifest.json";
    } else if (train_cmd->parsed()) {
      manifest.command = "train";
      manifest.seed = train_opts.seed;
      code = cmd_train(train_opts, manifest, err);
      manifest_path = with_suffix(train_opts.out, ".run.json");
    } else if (eval->parsed()) {
      manifest.command = "eval";
      code = cmd_eval(eval_opts, manifest, out, err);
      if (eval_opts.out != "-") manifest_path = with_suffix(eval_opts.out, ".run.json");
    } else if (predict->parsed()) {
      manifest.command = "predict";
      code = cmd_predict(predict_opts, manifest, out, err);
      if (predict_opts.out != "-") manifest_path = with_suffix(predict_opts.out, ".run.json");
    }
    if (manifest_path) {
      manifest.duration_s = seconds_since(start);
      manifest.write(*manifest_path);
    }
    return code;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << " (history kept up to epoch " << (e.epoch() - 1) << ")\n";
    return kExitDomain;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}

}  // namespace hrgc::cli
