#include "hrgc/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string_view>
#include <unordered_set>

#include "hrgc/data/csv.hpp"
#include "hrgc/errors.hpp"
#include "hrgc/json_fields.hpp"
#include "hrgc/numerics/parallel.hpp"
#include "hrgc/numerics/random.hpp"

namespace hrgc {

namespace {

constexpr int kBundleVersion = 1;
constexpr double kMinStd = 1e-12;

std::string numbered(const std::string& prefix, std::size_t i, const char* suffix = "") {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return prefix + buf + suffix;
}

Sequence standardize_resampled(const AlignedSequence& seq, const Standardization& stats, std::string id) {
  Sequence out;
  out.sequence_id = std::move(id);
  out.source_id = seq.source_id;
  out.sampling_interval_m = seq.sampling_interval_m;
  const std::size_t n = seq.length();
  out.features = Matrix(n, kInputChannels);
  out.target.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = seq.data.row(i);
    auto dst = out.features.row(i);
    for (std::size_t c = 0; c < kInputChannels; ++c) dst[c] = (src[c] - stats.feature_means[c]) / stats.feature_stds[c];
    out.target[i] = stats.standardize_target(src[kTargetColumn]);
  }
  return out;
}

struct Child {
  std::string id;
  AlignedSequence data;
};

std::vector<Child> augment_source(const AlignedSequence& source, const AugmentationPlan& plan, std::uint64_t seed) {
  Rng rng(derive_seed(seed, source.source_id));
  const std::size_t length = plan.sequence_length;
  std::vector<Child> children;
  children.reserve(plan.children_per_source());
  for (std::size_t k = 0; k < plan.noisy_copies; ++k) {
    children.push_back({numbered(source.source_id + "/noise-", k),
                        resample_to_length(augment_noise(source, rng, plan.noise), length)});
  }
  for (std::size_t k = 0; k < plan.downsample_pairs; ++k) {
    auto [even, odd] = augment_downsample(source, rng, plan.noise);
    children.push_back({numbered(source.source_id + "/split-", k, "-even"), resample_to_length(even, length)});
    children.push_back({numbered(source.source_id + "/split-", k, "-odd"), resample_to_length(odd, length)});
  }
  return children;
}

// Splits one CSV line into views; no quoting.
void split_views(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) return;
    start = comma + 1;
  }
}

double view_number(std::string_view cell, const std::string& path, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError(path, line, "non-numeric value '" + std::string(cell) + "'");
  }
  return v;
}

std::string bundle_header() {
  std::string h = "sequence_id,source_id,position_m";
  for (const auto& name : sequence_column_names()) h += "," + name;
  return h;
}

void write_split(const std::vector<Sequence>& sequences, const std::filesystem::path& path) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << bundle_header() << '\n';
    std::string line;
    for (const Sequence& s : sequences) {
      for (std::size_t i = 0; i < s.length(); ++i) {
        line = s.sequence_id;
        line += ',';
        line += s.source_id;
        line += ',';
        line += format_real(static_cast<double>(i) * s.sampling_interval_m);
        for (double v : s.features.row(i)) {
          line += ',';
          line += format_real(v);
        }
        line += ',';
        line += format_real(s.target[i]);
        line += '\n';
        out << line;
      }
    }
    if (!out.flush()) throw IoError("write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write " + path.string());
}

std::vector<Sequence> read_split(const std::filesystem::path& path, std::size_t expected_length) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string p = path.string();
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(p, 1, "missing header line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != bundle_header()) throw ParseError(p, 1, "unexpected header, expected '" + bundle_header() + "'");
  const std::size_t width = 3 + kSequenceColumns;

  std::vector<Sequence> out;
  std::unordered_set<std::string> seen;
  std::vector<std::string_view> cells;
  std::vector<double> rows;
  auto flush = [&](std::size_t at_line) {
    if (out.empty()) return;
    Sequence& s = out.back();
    const std::size_t n = rows.size() / kSequenceColumns;
    if (n != expected_length) {
      throw ParseError(p, at_line, "sequence '" + s.sequence_id + "' has " + std::to_string(n) + " rows, expected " +
                                       std::to_string(expected_length));
    }
    s.features = Matrix(n, kInputChannels);
    s.target.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < kInputChannels; ++c) s.features(i, c) = rows[i * kSequenceColumns + c];
      s.target[i] = rows[i * kSequenceColumns + kTargetColumn];
    }
    rows.clear();
  };
  double first_position = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    split_views(line, cells);
    if (cells.size() != width) {
      throw ParseError(p, line_no, "expected " + std::to_string(width) + " cells, found " + std::to_string(cells.size()));
    }
    if (out.empty() || cells[0] != out.back().sequence_id) {
      flush(line_no);
      if (!seen.insert(std::string(cells[0])).second) {
        throw ParseError(p, line_no, "sequence '" + std::string(cells[0]) + "' is not contiguous");
      }
      out.emplace_back();
      out.back().sequence_id = std::string(cells[0]);
      out.back().source_id = std::string(cells[1]);
      first_position = view_number(cells[2], p, line_no);
    } else if (rows.size() == kSequenceColumns) {
      out.back().sampling_interval_m = view_number(cells[2], p, line_no) - first_position;
    }
    if (cells[1] != out.back().source_id) throw ParseError(p, line_no, "source id changes within a sequence");
    for (std::size_t c = 0; c < kSequenceColumns; ++c) rows.push_back(view_number(cells[3 + c], p, line_no));
  }
  flush(line_no);
  return out;
}

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Validation:
      return "validation";
    case Split::Test:
      return "test";
  }
  return "unknown";
}

void AugmentationPlan::validate() const {
  double total = 0.0;
  for (double r : split_ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("augmentation plan: split ratios must be positive");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("augmentation plan: split ratios sum to " + format_real(total) + ", expected 1");
  }
  if (children_per_source() == 0) throw ConfigError("augmentation plan: no children per source");
  if (sequence_length < 2) throw ConfigError("augmentation plan: sequence_length must be >= 2");
  if (!(noise.range_fraction >= 0.0) || !std::isfinite(noise.range_fraction)) {
    throw ConfigError("augmentation plan: noise fraction must be >= 0");
  }
  if (!(noise.truncation_sds > 0.0)) throw ConfigError("augmentation plan: truncation bound must be > 0");
}

nlohmann::json AugmentationPlan::to_json() const {
  return {
      {"noisy_copies", noisy_copies},
      {"downsample_pairs", downsample_pairs},
      {"split_ratios", split_ratios},
      {"sequence_length", sequence_length},
      {"noise_range_fraction", noise.range_fraction},
      {"noise_truncation_sds", noise.truncation_sds},
  };
}

AugmentationPlan AugmentationPlan::from_json(const nlohmann::json& j) {
  AugmentationPlan plan;
  JsonFields(j, "augmentation plan")
      .read("noisy_copies", plan.noisy_copies)
      .read("downsample_pairs", plan.downsample_pairs)
      .read("split_ratios", plan.split_ratios)
      .read("sequence_length", plan.sequence_length)
      .read("noise_range_fraction", plan.noise.range_fraction)
      .read("noise_truncation_sds", plan.noise.truncation_sds)
      .finish();
  return plan;
}

Standardization Standardization::fit(std::span<const AlignedSequence> sequences) {
  std::array<double, kSequenceColumns> sum{};
  std::size_t count = 0;
  for (const AlignedSequence& s : sequences) {
    for (std::size_t i = 0; i < s.length(); ++i) {
      const auto row = s.data.row(i);
      for (std::size_t c = 0; c < kSequenceColumns; ++c) sum[c] += row[c];
    }
    count += s.length();
  }
  if (count == 0) throw ContractError("Standardization::fit: no rows");
  std::array<double, kSequenceColumns> mean{};
  for (std::size_t c = 0; c < kSequenceColumns; ++c) mean[c] = sum[c] / static_cast<double>(count);
  std::array<double, kSequenceColumns> sq{};
  for (const AlignedSequence& s : sequences) {
    for (std::size_t i = 0; i < s.length(); ++i) {
      const auto row = s.data.row(i);
      for (std::size_t c = 0; c < kSequenceColumns; ++c) sq[c] += (row[c] - mean[c]) * (row[c] - mean[c]);
    }
  }
  auto sd = [&](std::size_t c) {
    const double v = std::sqrt(sq[c] / static_cast<double>(count));
    return v < kMinStd ? 1.0 : v;
  };
  Standardization st;
  for (std::size_t c = 0; c < kInputChannels; ++c) {
    st.feature_means[c] = mean[c];
    st.feature_stds[c] = sd(c);
  }
  st.target_mean = mean[kTargetColumn];
  st.target_std = sd(kTargetColumn);
  return st;
}

Standardization Standardization::identity() {
  Standardization st;
  st.feature_stds.fill(1.0);
  return st;
}

nlohmann::json Standardization::to_json() const {
  return {{"feature_means", feature_means},
          {"feature_stds", feature_stds},
          {"target_mean", target_mean},
          {"target_std", target_std}};
}

Standardization Standardization::from_json(const nlohmann::json& j) {
  Standardization st = identity();
  JsonFields(j, "standardization")
      .read("feature_means", st.feature_means)
      .read("feature_stds", st.feature_stds)
      .read("target_mean", st.target_mean)
      .read("target_std", st.target_std)
      .finish();
  for (double s : st.feature_stds) {
    if (!(s > 0.0)) throw ConfigError("standardization: feature sd must be positive");
  }
  if (!(st.target_std > 0.0)) throw ConfigError("standardization: target sd must be positive");
  return st;
}

Sequence to_model_sequence(const AlignedSequence& seq, const Standardization& stats, std::size_t length,
                           std::string sequence_id) {
  if (seq.data.cols() != kSequenceColumns) {
    throw ShapeError("to_model_sequence: expected 8 columns, got " + std::to_string(seq.data.cols()));
  }
  return standardize_resampled(resample_to_length(seq, length), stats, std::move(sequence_id));
}

std::array<std::size_t, 3> DatasetBundle::split_counts() const {
  return {splits[0].size(), splits[1].size(), splits[2].size()};
}

std::size_t DatasetBundle::total_children() const {
  const auto c = split_counts();
  return c[0] + c[1] + c[2];
}

std::set<std::string> DatasetBundle::source_ids() const {
  std::set<std::string> ids;
  for (const auto& list : split_sources) ids.insert(list.begin(), list.end());
  return ids;
}

nlohmann::json DatasetBundle::manifest() const {
  const std::size_t sources = split_sources[0].size() + split_sources[1].size() + split_sources[2].size();
  nlohmann::json counts;
  nlohmann::json source_lists;
  for (Split s : kAllSplits) {
    counts[std::string(split_name(s))] = split(s).size();
    source_lists[std::string(split_name(s))] = split_sources[static_cast<std::size_t>(s)];
  }
  return {
      {"format", "hrgc-dataset"},
      {"version", kBundleVersion},
      {"seed", seed},
      {"plan", plan.to_json()},
      {"source_count", sources},
      {"children_per_source", plan.children_per_source()},
      {"technique_counts", {{"noise", plan.noisy_copies * sources}, {"downsample", 2 * plan.downsample_pairs * sources}}},
      {"total_children", total_children()},
      {"split_counts", counts},
      {"split_sources", source_lists},
      {"standardization", stats.to_json()},
  };
}

std::array<std::size_t, 3> allocate_sources(std::size_t n, const std::array<double, 3>& ratios) {
  if (n < 3) throw ContractError("at least 3 sources required, got " + std::to_string(n));
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  // Leftovers go to the largest remainders, ties to the earlier split.
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
      if (remainder[i] > remainder[best]) best = i;
    }
    ++counts[best];
    remainder[best] = -1.0;
    ++assigned;
  }
  // Every split gets at least one source, taken from the largest.
  for (std::size_t i = 0; i < 3; ++i) {
    if (counts[i] == 0) {
      const std::size_t donor = static_cast<std::size_t>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
      --counts[donor];
      ++counts[i];
    }
  }
  return counts;
}

DatasetBundle build_dataset(const std::vector<AlignedSequence>& sources, const AugmentationPlan& plan,
                            std::uint64_t seed) {
  plan.validate();
  const std::size_t n = sources.size();
  if (n < 3) throw ContractError("at least 3 sources required, got " + std::to_string(n));
  {
    std::set<std::string> ids;
    for (const AlignedSequence& s : sources) {
      if (!ids.insert(s.source_id).second) throw ConfigError("duplicate source id '" + s.source_id + "'");
      if (s.data.cols() != kSequenceColumns) {
        throw ShapeError("source '" + s.source_id + "' has " + std::to_string(s.data.cols()) + " columns, expected 8");
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(seed, std::string_view("split")));
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[split_rng.uniform_index(i + 1)]);
  const auto counts = allocate_sources(n, plan.split_ratios);
  std::array<std::vector<std::size_t>, 3> members;
  std::size_t next = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    members[s].assign(order.begin() + static_cast<std::ptrdiff_t>(next),
                      order.begin() + static_cast<std::ptrdiff_t>(next + counts[s]));
    std::sort(members[s].begin(), members[s].end());
    next += counts[s];
  }

  std::vector<std::vector<Child>> children(n);
  parallel_for(n, [&](std::size_t i) { children[i] = augment_source(sources[i], plan, seed); });

  DatasetBundle bundle;
  bundle.plan = plan;
  bundle.seed = seed;
  {
    std::vector<AlignedSequence> train;
    for (std::size_t i : members[0]) {
      for (Child& c : children[i]) train.push_back(std::move(c.data));
    }
    bundle.stats = Standardization::fit(train);
    std::size_t k = 0;
    for (std::size_t i : members[0]) {
      for (Child& c : children[i]) c.data = std::move(train[k++]);
    }
  }
  for (std::size_t s = 0; s < 3; ++s) {
    auto& out = bundle.splits[s];
    out.reserve(members[s].size() * plan.children_per_source());
    for (std::size_t i : members[s]) {
      bundle.split_sources[s].push_back(sources[i].source_id);
      for (Child& c : children[i]) out.push_back(standardize_resampled(c.data, bundle.stats, std::move(c.id)));
      std::vector<Child>().swap(children[i]);
    }
  }
  return bundle;
}

std::vector<AlignedSequence> preprocess_all(const std::vector<RawCrossingRecord>& records) {
  std::vector<AlignedSequence> out(records.size());
  std::vector<std::string> failures(records.size());
  parallel_for(records.size(), [&](std::size_t i) {
    try {
      out[i] = preprocess(records[i]);
    } catch (const AlignmentError& e) {
      failures[i] = e.what();
    }
  });
  std::string message;
  for (const std::string& f : failures) {
    if (!f.empty()) message += (message.empty() ? "" : "; ") + f;
  }
  if (!message.empty()) throw AlignmentError("alignment failed: " + message);
  return out;
}

void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
  for (Split s : kAllSplits) write_split(bundle.split(s), dir / (std::string(split_name(s)) + ".csv"));
  write_text_file(dir / "manifest.json", bundle.manifest().dump(2) + "\n");
}

DatasetBundle load_bundle(const std::filesystem::path& dir) {
  const std::filesystem::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open " + manifest_path.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(manifest_path.string() + ": malformed JSON (" + e.what() + ")");
  }
  DatasetBundle bundle;
  try {
    if (m.at("format") != "hrgc-dataset") throw LoadError(manifest_path.string() + ": not a dataset manifest");
    if (m.at("version") != kBundleVersion) {
      throw LoadError(manifest_path.string() + ": expected version " + std::to_string(kBundleVersion) + ", found " +
                      m.at("version").dump());
    }
    bundle.seed = m.at("seed").get<std::uint64_t>();
    bundle.plan = AugmentationPlan::from_json(m.at("plan"));
    bundle.stats = Standardization::from_json(m.at("standardization"));
    for (Split s : kAllSplits) {
      const std::string name(split_name(s));
      bundle.split_sources[static_cast<std::size_t>(s)] =
          m.at("split_sources").at(name).get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(manifest_path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(manifest_path.string() + ": " + e.what());
  }
  for (Split s : kAllSplits) {
    const std::string name(split_name(s));
    auto& seqs = bundle.split(s);
    seqs = read_split(dir / (name + ".csv"), bundle.plan.sequence_length);
    const auto& allowed = bundle.split_sources[static_cast<std::size_t>(s)];
    for (const Sequence& q : seqs) {
      if (std::find(allowed.begin(), allowed.end(), q.source_id) == allowed.end()) {
        throw LoadError(name + ".csv: sequence '" + q.sequence_id + "' belongs to source '" + q.source_id +
                        "', which is not listed for the " + name + " split");
      }
    }
    std::size_t expected = 0;
    try {
      expected = m.at("split_counts").at(name).get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(manifest_path.string() + ": " + e.what());
    }
    if (seqs.size() != expected) {
      throw LoadError(name + ".csv: expected " + std::to_string(expected) + " sequences, found " +
                      std::to_string(seqs.size()));
    }
  }
  return bundle;
}

}  // namespace hrgc
