#include "hrgc/data/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "hrgc/errors.hpp"

namespace hrgc {

std::size_t argmax_first(std::span<const double> values) {
  if (values.empty()) throw ContractError("argmax: empty profile");
  std::size_t best = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw ContractError("argmax: non-finite value at index " + std::to_string(i));
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<double> normalize_gps_altitude(std::span<const double> altitudes) {
  if (altitudes.empty()) throw ContractError("normalize_gps_altitude: empty input");
  std::vector<double> out(altitudes.size());
  const double first = altitudes[0];
  for (std::size_t i = 0; i < altitudes.size(); ++i) out[i] = altitudes[i] - first;
  return out;
}

PeakAlignment align_by_peak(std::span<const double> gps_profile, std::span<const double> wp_profile,
                            std::size_t min_half_width) {
  PeakAlignment a;
  a.gps_peak = argmax_first(gps_profile);
  a.wp_peak = argmax_first(wp_profile);
  a.half_width = std::min({a.gps_peak, gps_profile.size() - 1 - a.gps_peak, a.wp_peak,
                           wp_profile.size() - 1 - a.wp_peak});
  if (a.half_width < min_half_width) {
    throw AlignmentError("peak alignment window " + std::to_string(a.half_width) + " is below the minimum " +
                         std::to_string(min_half_width) + " (gps peak " + std::to_string(a.gps_peak) + " of " +
                         std::to_string(gps_profile.size()) + ", profiler peak " + std::to_string(a.wp_peak) +
                         " of " + std::to_string(wp_profile.size()) + ")");
  }
  return a;
}

AlignedSequence merge_channels(const Matrix& imu6, std::span<const double> gps_norm, std::span<const double> wp) {
  if (imu6.cols() != 6) throw ShapeError("merge_channels: expected 6 IMU columns, got " + std::to_string(imu6.cols()));
  const std::size_t n = imu6.rows();
  if (gps_norm.size() != n || wp.size() != n) {
    throw ShapeError("merge_channels: lengths differ (imu " + std::to_string(n) + ", gps " +
                     std::to_string(gps_norm.size()) + ", profiler " + std::to_string(wp.size()) + ")");
  }
  AlignedSequence out;
  out.data = Matrix(n, kSequenceColumns);
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = out.data.row(i);
    const auto src = imu6.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
    dst[kGpsProfileColumn] = gps_norm[i];
    dst[kTargetColumn] = wp[i];
  }
  if (n > 0) out.peak_index = argmax_first(gps_norm);
  return out;
}

AlignedSequence preprocess(const RawCrossingRecord& record) {
  const Matrix& raw = record.imu_gps;
  if (raw.cols() != kRawChannelCount) {
    throw ShapeError("crossing " + record.crossing_id + ": expected 7 sensor channels, got " +
                     std::to_string(raw.cols()));
  }
  const std::vector<double> gps = normalize_gps_altitude(raw.column(kGpsAltitude));
  PeakAlignment a;
  try {
    a = align_by_peak(gps, record.profiler);
  } catch (const AlignmentError& e) {
    throw AlignmentError("crossing " + record.crossing_id + ": " + e.what());
  } catch (const ContractError& e) {
    throw AlignmentError("crossing " + record.crossing_id + ": " + e.what());
  }
  const std::size_t len = a.length();
  const Matrix imu = raw.slice_rows(a.gps_begin(), a.gps_begin() + len).slice_cols(0, 6);
  AlignedSequence out =
      merge_channels(imu, std::span<const double>(gps).subspan(a.gps_begin(), len),
                     std::span<const double>(record.profiler).subspan(a.wp_begin(), len));
  out.source_id = record.crossing_id;
  out.sampling_interval_m = record.sampling_interval_m;
  out.peak_index = a.half_width;
  return out;
}

AlignedSequence resample_to_length(const AlignedSequence& seq, std::size_t length) {
  const std::size_t n = seq.length();
  if (length < 2 || n < 2) {
    throw ContractError("resample_to_length: need input length >= 2 and target >= 2, got " + std::to_string(n) +
                        " -> " + std::to_string(length));
  }
  const std::size_t cols = seq.data.cols();
  AlignedSequence out;
  out.source_id = seq.source_id;
  out.data = Matrix(length, cols);
  const double span = static_cast<double>(n - 1);
  for (std::size_t k = 0; k < length; ++k) {
    const double t = static_cast<double>(k) * span / static_cast<double>(length - 1);
    const std::size_t i = std::min(static_cast<std::size_t>(t), n - 2);
    const double f = t - static_cast<double>(i);
    const auto lo = seq.data.row(i);
    const auto hi = seq.data.row(i + 1);
    auto dst = out.data.row(k);
    for (std::size_t c = 0; c < cols; ++c) dst[c] = f == 0.0 ? lo[c] : f == 1.0 ? hi[c] : lo[c] + f * (hi[c] - lo[c]);
  }
  const double ratio = static_cast<double>(length - 1) / span;
  out.peak_index = static_cast<std::size_t>(std::llround(static_cast<double>(seq.peak_index) * ratio));
  out.sampling_interval_m = seq.sampling_interval_m / ratio;
  return out;
}

AlignedSequence keep_every_nth(const AlignedSequence& seq, std::size_t factor, std::size_t offset) {
  if (factor == 0) throw ContractError("keep_every_nth: factor must be >= 1");
  if (offset >= seq.length()) {
    throw ContractError("keep_every_nth: offset " + std::to_string(offset) + " beyond length " +
                        std::to_string(seq.length()));
  }
  const std::size_t count = (seq.length() - offset + factor - 1) / factor;
  AlignedSequence out;
  out.source_id = seq.source_id;
  out.data = Matrix(count, seq.data.cols());
  for (std::size_t k = 0; k < count; ++k) {
    const auto src = seq.data.row(offset + k * factor);
    std::copy(src.begin(), src.end(), out.data.row(k).begin());
  }
  const std::size_t peak = seq.peak_index < offset ? 0 : (seq.peak_index - offset) / factor;
  out.peak_index = std::min(peak, count - 1);
  out.sampling_interval_m = seq.sampling_interval_m * static_cast<double>(factor);
  return out;
}

}  // namespace hrgc
