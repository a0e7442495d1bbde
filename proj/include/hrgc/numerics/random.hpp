#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hrgc {

/// Seeded random source with platform-independent draws. The standard
/// library distributions are implementation-defined, so uniform and normal
/// variates are derived from the raw engine output here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  // Standard normal via the Marsaglia polar method.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  // Normal(0, sd) conditioned on |x| <= bound_sds * sd (rejection sampling).
  double truncated_normal(double sd, double bound_sds);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stable 64-bit mixing of a seed with a string key (FNV-1a, then splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace hrgc
