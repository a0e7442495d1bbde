#include "hrgc/data/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hrgc/errors.hpp"

namespace hrgc {

double truncated_normal_sd(double sd, double bound_sds) {
  const double b = bound_sds;
  const double pdf = std::exp(-0.5 * b * b) / std::sqrt(2.0 * std::numbers::pi);
  const double mass = std::erf(b / std::numbers::sqrt2);
  return sd * std::sqrt(1.0 - 2.0 * b * pdf / mass);
}

AlignedSequence augment_noise(const AlignedSequence& seq, Rng& rng, const NoiseSettings& settings) {
  AlignedSequence out = seq;
  const std::size_t n = seq.length();
  if (n == 0) return out;
  double lo = seq.data(0, kGpsProfileColumn);
  double hi = lo;
  for (std::size_t i = 1; i < n; ++i) {
    lo = std::min(lo, seq.data(i, kGpsProfileColumn));
    hi = std::max(hi, seq.data(i, kGpsProfileColumn));
  }
  const double sd = settings.range_fraction * (hi - lo);
  if (sd == 0.0) return out;
  for (std::size_t i = 0; i < n; ++i) {
    out.data(i, kGpsProfileColumn) += rng.truncated_normal(sd, settings.truncation_sds);
  }
  return out;
}

std::pair<AlignedSequence, AlignedSequence> split_even_odd(const AlignedSequence& seq) {
  if (seq.length() < 2) throw ContractError("split_even_odd: need at least 2 rows, got " + std::to_string(seq.length()));
  return {keep_every_nth(seq, 2, 0), keep_every_nth(seq, 2, 1)};
}

std::pair<AlignedSequence, AlignedSequence> augment_downsample(const AlignedSequence& seq, Rng& rng,
                                                               const NoiseSettings& settings) {
  if (seq.length() < kMinDownsampleLength) {
    throw ContractError("augment_downsample: need at least " + std::to_string(kMinDownsampleLength) +
                        " rows, got " + std::to_string(seq.length()));
  }
  return split_even_odd(augment_noise(seq, rng, settings));
}

}  // namespace hrgc
