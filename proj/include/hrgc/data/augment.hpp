#pragma once

#include <cstddef>
#include <utility>

#include "hrgc/data/preprocess.hpp"
#include "hrgc/numerics/random.hpp"

namespace hrgc {

struct NoiseSettings {
  // Noise sd as a fraction of the GPS profile's range.
  double range_fraction = 0.04;
  // Draws are confined to +-truncation_sds standard deviations.
  double truncation_sds = 2.0;
};

inline constexpr std::size_t kMinDownsampleLength = 2 * kMinAlignmentHalfWidth + 1;

// Standard deviation of Normal(0, sd) conditioned on |x| <= bound_sds * sd.
double truncated_normal_sd(double sd, double bound_sds);

// Adds i.i.d. truncated-normal noise to the GPS profile column only. A
// constant profile comes back unchanged and consumes no draws.
AlignedSequence augment_noise(const AlignedSequence& seq, Rng& rng, const NoiseSettings& settings = {});

// Rows 0, 2, 4, ... and rows 1, 3, 5, ... of `seq`.
std::pair<AlignedSequence, AlignedSequence> split_even_odd(const AlignedSequence& seq);

// Noise first, then split_even_odd. Needs kMinDownsampleLength rows so both
// children keep the minimum alignment window.
std::pair<AlignedSequence, AlignedSequence> augment_downsample(const AlignedSequence& seq, Rng& rng,
                                                               const NoiseSettings& settings = {});

}  // namespace hrgc
