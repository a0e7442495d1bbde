#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hrgc/data/scene.hpp"
#include "hrgc/numerics/matrix.hpp"

namespace hrgc {

// Column layout of an aligned sequence: the six IMU channels in raw order,
// then the normalized GPS profile and the profiler target.
inline constexpr std::size_t kInputChannels = 7;
inline constexpr std::size_t kSequenceColumns = 8;
inline constexpr std::size_t kGpsProfileColumn = 6;
inline constexpr std::size_t kTargetColumn = 7;
inline constexpr std::size_t kMinAlignmentHalfWidth = 16;

/// N x 8 merged record of one crossing (or an augmented child of one).
struct AlignedSequence {
  std::string source_id;
  Matrix data;
  std::size_t peak_index = 0;
  double sampling_interval_m = 0.05;

  std::size_t length() const { return data.rows(); }
  friend bool operator==(const AlignedSequence&, const AlignedSequence&) = default;
};

// Index of the first maximum. Throws ContractError on empty or non-finite
// input.
std::size_t argmax_first(std::span<const double> values);

// Elevation relative to the first sample.
std::vector<double> normalize_gps_altitude(std::span<const double> altitudes);

/// Symmetric windows [peak - half_width, peak + half_width] in both inputs.
struct PeakAlignment {
  std::size_t gps_peak = 0;
  std::size_t wp_peak = 0;
  std::size_t half_width = 0;

  std::size_t gps_begin() const { return gps_peak - half_width; }
  std::size_t wp_begin() const { return wp_peak - half_width; }
  std::size_t length() const { return 2 * half_width + 1; }
};

// Largest window centred on both maxima; AlignmentError below
// `min_half_width`.
PeakAlignment align_by_peak(std::span<const double> gps_profile, std::span<const double> wp_profile,
                            std::size_t min_half_width = kMinAlignmentHalfWidth);

// peak_index is the argmax of the GPS column.
AlignedSequence merge_channels(const Matrix& imu6, std::span<const double> gps_norm, std::span<const double> wp);

// Normalize, align and merge one raw record. AlignmentError messages name the
// crossing.
AlignedSequence preprocess(const RawCrossingRecord& record);

// Linear interpolation of every column onto `length` evenly spaced positions
// spanning the original index range.
AlignedSequence resample_to_length(const AlignedSequence& seq, std::size_t length);

// Rows offset, offset + factor, offset + 2 * factor, ...
AlignedSequence keep_every_nth(const AlignedSequence& seq, std::size_t factor, std::size_t offset = 0);

}  // namespace hrgc
