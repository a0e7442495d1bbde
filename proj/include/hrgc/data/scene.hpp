#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hrgc/numerics/matrix.hpp"

namespace hrgc {

// Column order of RawCrossingRecord::imu_gps.
enum RawChannel : std::size_t {
  kAccelX = 0,
  kAccelY,
  kAccelZ,
  kRoll,
  kPitch,
  kSpeed,
  kGpsAltitude,
  kRawChannelCount,
};

inline constexpr double kGravity = 9.80665;

/// One drive over a crossing as the instruments report it. Angles are in
/// radians and speed in m/s; both grids share `sampling_interval_m`.
struct RawCrossingRecord {
  std::string crossing_id;
  double collection_speed_kmh = 0.0;
  double sampling_interval_m = 0.05;
  Matrix imu_gps;                // N x 7
  std::vector<double> profiler;  // M ground-truth elevations

  friend bool operator==(const RawCrossingRecord&, const RawCrossingRecord&) = default;
};

struct SensorNoise {
  double accel = 0.05;     // m/s^2
  double angle = 0.002;    // rad
  double speed = 0.05;     // m/s
  double gps = 0.005;      // m, white
  double profiler = 5e-4;  // m
};

// Slowly varying GPS altitude bias: a random walk with this step sd per
// sample, on top of a fixed base altitude.
struct GpsDrift {
  double base_altitude = 300.0;
  double step_sd = 2e-4;
};

/// Geometry and instrument settings for one synthetic crossing.
///
/// The true profile is symmetric about x = 0: a parabolic crest of height
/// `hump_height` over |x| <= crest_half_width that has dropped by
/// crest_drop * hump_height at its edges, joined by a cubic Hermite approach
/// that reaches 0 with zero slope at |x| = crest_half_width + approach_length.
/// The profile is C1 everywhere.
struct SceneConfig {
  std::string crossing_id = "HRGC-0000";
  double hump_height = 0.3;
  double approach_length = 15.0;
  double crest_half_width = 3.0;
  double crest_drop = 0.05;
  double sampling_interval = 0.05;
  double record_length = 125.0;
  double speed_kmh = 20.0;
  // Relative amplitude of the slow speed oscillation during the pass.
  double speed_variation = 0.05;
  double roll_amplitude = 0.01;
  // Distance constant of the first-order lag between road and GPS antenna.
  double suspension_lag = 1.0;
  // The profiler record starts and ends up to this many samples inside the
  // vehicle record.
  std::size_t profiler_trim_max = 200;
  SensorNoise noise;
  GpsDrift drift;
  std::uint64_t rng_seed = 0;

  // Throws ConfigError naming the first violated constraint.
  void validate() const;
  std::size_t sample_count() const;

  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static SceneConfig from_json(const nlohmann::json& j);
};

// Closed-form true elevation and its first two derivatives at x.
struct ProfilePoint {
  double elevation;
  double slope;
  double curvature;
};
ProfilePoint true_profile(const SceneConfig& cfg, double x);

RawCrossingRecord synthesize_crossing(const SceneConfig& cfg);

/// Ranges from which a batch of crossings draws its geometry and speed.
struct SynthesisPlan {
  SceneConfig base;
  double hump_height_min = 0.15;
  double hump_height_max = 0.6;
  double approach_length_min = 10.0;
  double approach_length_max = 20.0;
  double crest_half_width_min = 2.0;
  double crest_half_width_max = 5.0;
  double speed_kmh_min = 10.0;
  double speed_kmh_max = 32.0;
  std::string id_prefix = "HRGC-";

  void validate() const;
  nlohmann::json to_json() const;
  static SynthesisPlan from_json(const nlohmann::json& j);
};

// The i-th scene of a batch; depends only on (plan, seed, i).
SceneConfig scene_for_index(const SynthesisPlan& plan, std::uint64_t seed, std::size_t index);
std::vector<RawCrossingRecord> synthesize_batch(const SynthesisPlan& plan, std::size_t count,
                                                std::uint64_t seed, std::size_t first_index = 0);

}  // namespace hrgc
