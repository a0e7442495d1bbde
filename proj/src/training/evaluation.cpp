#include "hrgc/training/evaluation.hpp"

#include <map>

#include "hrgc/data/csv.hpp"
#include "hrgc/errors.hpp"
#include "hrgc/numerics/parallel.hpp"

namespace hrgc {

template <typename Real>
Predictor model_predictor(const HybridModel<Real>& model) {
  return [model](const Sequence& s) {
    NoGradGuard no_grad;
    const auto& v = s.features.values();
    const Tensor<Real> x =
        Tensor<Real>::from_values({s.length(), s.features.cols()}, std::vector<Real>(v.begin(), v.end()));
    const Tensor<Real> y = model.forward(x);
    const auto out = y.values();
    return std::vector<double>(out.begin(), out.end());
  };
}

Predictor oracle_predictor() {
  return [](const Sequence& s) { return s.target; };
}

Predictor zero_predictor(const Standardization& stats) {
  return [stats](const Sequence& s) { return std::vector<double>(s.length(), stats.standardize_target(0.0)); };
}

ErrorAccumulator score_sequences(const Predictor& predict, std::span<const Sequence> sequences,
                                 const Standardization& stats) {
  std::vector<ErrorAccumulator> parts(sequences.size());
  parallel_for(sequences.size(), [&](std::size_t i) {
    const Sequence& s = sequences[i];
    const std::vector<double> z = predict(s);
    if (z.size() != s.length()) {
      throw ShapeError("prediction for '" + s.sequence_id + "' has " + std::to_string(z.size()) + " values, expected " +
                       std::to_string(s.length()));
    }
    std::vector<double> pred(z.size());
    std::vector<double> truth(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
      pred[k] = stats.destandardize_target(z[k]);
      truth[k] = stats.destandardize_target(s.target[k]);
    }
    parts[i].add(pred, truth);
  });
  ErrorAccumulator total;
  for (const ErrorAccumulator& p : parts) total.merge(p);
  return total;
}

void MetricsReport::append(const MetricsReport& other) { rows.insert(rows.end(), other.rows.begin(), other.rows.end()); }

std::string MetricsReport::split_table_csv() const {
  std::vector<std::string> models;
  std::map<std::string, std::map<std::string, const MetricsRow*>> by_model;
  for (const MetricsRow& r : rows) {
    if (r.downsample) continue;
    if (!by_model.count(r.model)) models.push_back(r.model);
    by_model[r.model][r.split] = &r;
  }
  std::string out = "model,train_rmse_m,train_mae_m,validation_rmse_m,validation_mae_m,test_rmse_m,test_mae_m\n";
  for (const std::string& m : models) {
    out += m;
    for (Split s : kAllSplits) {
      const auto it = by_model[m].find(std::string(split_name(s)));
      if (it == by_model[m].end()) {
        out += ",,";
      } else {
        out += "," + format_real(it->second->rmse_m) + "," + format_real(it->second->mae_m);
      }
    }
    out += "\n";
  }
  return out;
}

std::string MetricsReport::generalization_table_csv() const {
  std::map<std::size_t, std::vector<const MetricsRow*>> by_factor;
  for (const MetricsRow& r : rows) {
    if (r.downsample) by_factor[*r.downsample].push_back(&r);
  }
  std::string out = "downsampling_factor,model,rmse_m,mae_m\n";
  for (const auto& [factor, list] : by_factor) {
    for (const MetricsRow* r : list) {
      out += (factor == 1 ? std::string("-") : std::to_string(factor)) + "," + r->model + "," + format_real(r->rmse_m) +
             "," + format_real(r->mae_m) + "\n";
    }
  }
  return out;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const MetricsRow& r : rows) {
    nlohmann::json j = {{"model", r.model}, {"split", r.split}, {"rmse_m", r.rmse_m},
                        {"mae_m", r.mae_m}, {"sequences", r.sequences}};
    j["downsample_factor"] = r.downsample ? nlohmann::json(*r.downsample) : nlohmann::json(nullptr);
    arr.push_back(std::move(j));
  }
  return {{"rows", arr}};
}

MetricsReport evaluate(const Predictor& predict, const DatasetBundle& bundle, const std::string& model) {
  MetricsReport report;
  for (Split s : kAllSplits) {
    const auto& seqs = bundle.split(s);
    if (seqs.empty()) throw ContractError("evaluate: the " + std::string(split_name(s)) + " split is empty");
    const ErrorAccumulator acc = score_sequences(predict, seqs, bundle.stats);
    report.rows.push_back({model, std::string(split_name(s)), std::nullopt, acc.rmse(), acc.mae(), seqs.size()});
  }
  return report;
}

std::vector<Sequence> heldout_sequences(std::span<const AlignedSequence> heldout, const Standardization& stats,
                                        std::size_t length, std::size_t factor) {
  std::vector<Sequence> out;
  out.reserve(heldout.size());
  for (const AlignedSequence& h : heldout) {
    const std::string id = h.source_id + "/factor-" + std::to_string(factor);
    out.push_back(to_model_sequence(keep_every_nth(h, factor), stats, length, id));
  }
  return out;
}

MetricsReport generalization_eval(const Predictor& predict, std::span<const AlignedSequence> heldout,
                                  const std::set<std::string>& training_sources, const Standardization& stats,
                                  std::size_t length, std::span<const std::size_t> factors, const std::string& model) {
  if (heldout.empty()) throw ContractError("generalization_eval: no held-out sequences");
  if (factors.empty()) throw ContractError("generalization_eval: no down-sampling factors");
  for (const AlignedSequence& h : heldout) {
    if (training_sources.count(h.source_id)) {
      throw LeakageError("held-out sequence '" + h.source_id + "' is part of the training bundle");
    }
  }
  MetricsReport report;
  for (std::size_t f : factors) {
    if (f == 0) throw ContractError("generalization_eval: factor must be >= 1");
    const std::vector<Sequence> seqs = heldout_sequences(heldout, stats, length, f);
    const ErrorAccumulator acc = score_sequences(predict, seqs, stats);
    report.rows.push_back({model, "heldout", f, acc.rmse(), acc.mae(), seqs.size()});
  }
  return report;
}

template Predictor model_predictor<float>(const HybridModel<float>&);
template Predictor model_predictor<double>(const HybridModel<double>&);

}  // namespace hrgc
