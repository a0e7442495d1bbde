#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hrgc/data/augment.hpp"
#include "hrgc/data/preprocess.hpp"
#include "hrgc/data/scene.hpp"

namespace hrgc {

enum class Split : std::size_t { Train = 0, Validation = 1, Test = 2 };
inline constexpr std::array<Split, 3> kAllSplits = {Split::Train, Split::Validation, Split::Test};
std::string_view split_name(Split s);

/// How each source sequence is multiplied into training children.
struct AugmentationPlan {
  // Technique 1: noisy copies per source.
  std::size_t noisy_copies = 42;
  // Technique 2: noise-then-split pairs per source, two children each.
  std::size_t downsample_pairs = 21;
  // Fractions of sources (not children) assigned to train/validation/test.
  std::array<double, 3> split_ratios = {0.74, 0.13, 0.13};
  std::size_t sequence_length = 512;
  NoiseSettings noise;

  std::size_t children_per_source() const { return noisy_copies + 2 * downsample_pairs; }

  // ConfigError unless the ratios are positive and sum to 1.
  void validate() const;
  nlohmann::json to_json() const;
  static AugmentationPlan from_json(const nlohmann::json& j);

  friend bool operator==(const AugmentationPlan& a, const AugmentationPlan& b) {
    return a.to_json() == b.to_json();
  }
};

/// Per-channel affine standardization fitted on training children only.
struct Standardization {
  std::array<double, kInputChannels> feature_means{};
  std::array<double, kInputChannels> feature_stds{};
  double target_mean = 0.0;
  double target_std = 1.0;

  // Population mean and sd over every row of every sequence; an sd below
  // 1e-12 is replaced by 1.
  static Standardization fit(std::span<const AlignedSequence> sequences);
  static Standardization identity();

  double standardize_target(double meters) const { return (meters - target_mean) / target_std; }
  double destandardize_target(double z) const { return z * target_std + target_mean; }

  nlohmann::json to_json() const;
  static Standardization from_json(const nlohmann::json& j);
  friend bool operator==(const Standardization&, const Standardization&) = default;
};

/// Fixed-length, standardized model input with its standardized target.
struct Sequence {
  std::string sequence_id;
  std::string source_id;
  double sampling_interval_m = 0.0;
  Matrix features;             // L x 7
  std::vector<double> target;  // L

  std::size_t length() const { return features.rows(); }
  friend bool operator==(const Sequence&, const Sequence&) = default;
};

// Resample to `length` and standardize. The target column is carried along
// whether or not it holds ground truth.
Sequence to_model_sequence(const AlignedSequence& seq, const Standardization& stats, std::size_t length,
                           std::string sequence_id);

struct DatasetBundle {
  AugmentationPlan plan;
  std::uint64_t seed = 0;
  Standardization stats;
  std::array<std::vector<Sequence>, 3> splits;
  // Source ids per split in source order.
  std::array<std::vector<std::string>, 3> split_sources;

  const std::vector<Sequence>& split(Split s) const { return splits[static_cast<std::size_t>(s)]; }
  std::vector<Sequence>& split(Split s) { return splits[static_cast<std::size_t>(s)]; }
  std::array<std::size_t, 3> split_counts() const;
  std::size_t total_children() const;
  std::set<std::string> source_ids() const;

  nlohmann::json manifest() const;
};

// Largest-remainder apportionment of n sources with every split non-empty.
std::array<std::size_t, 3> allocate_sources(std::size_t n, const std::array<double, 3>& ratios);

/// Augments every source, assigns whole sources to splits and standardizes
/// with training statistics. Needs at least 3 sources with distinct ids.
/// Deterministic in (sources, plan, seed) regardless of thread count.
DatasetBundle build_dataset(const std::vector<AlignedSequence>& sources, const AugmentationPlan& plan,
                            std::uint64_t seed);

// Preprocesses each record first. Alignment failures are gathered into one
// AlignmentError that lists every failing crossing id.
std::vector<AlignedSequence> preprocess_all(const std::vector<RawCrossingRecord>& records);

// Directory with manifest.json and train.csv / validation.csv / test.csv.
void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);
DatasetBundle load_bundle(const std::filesystem::path& dir);

}  // namespace hrgc
