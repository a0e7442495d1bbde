#include "hrgc/data/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "hrgc/errors.hpp"
#include "hrgc/json_fields.hpp"
#include "hrgc/numerics/random.hpp"

namespace hrgc {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("scene config: " + what);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

std::size_t SceneConfig::sample_count() const {
  const auto half = static_cast<std::size_t>(std::llround(record_length / (2.0 * sampling_interval)));
  return 2 * half + 1;
}

void SceneConfig::validate() const {
  require(finite_nonneg(hump_height), "hump_height must be >= 0");
  require(std::isfinite(sampling_interval) && sampling_interval > 0.0, "sampling_interval must be > 0");
  require(std::isfinite(approach_length) && approach_length > 0.0, "approach_length must be > 0");
  require(std::isfinite(crest_half_width) && crest_half_width > 0.0, "crest_half_width must be > 0");
  require(crest_drop > 0.0 && crest_drop < 1.0, "crest_drop must lie in (0, 1)");
  // Beyond this ratio the Hermite approach overshoots and the crest stops
  // being the global maximum.
  require(approach_length / crest_half_width <= 1.5 * (1.0 - crest_drop) / crest_drop,
          "approach_length / crest_half_width too large for a monotone approach");
  require(speed_kmh >= 10.0 && speed_kmh <= 32.0, "speed_kmh must lie in [10, 32]");
  require(speed_variation >= 0.0 && speed_variation < 0.5, "speed_variation must lie in [0, 0.5)");
  require(finite_nonneg(roll_amplitude), "roll_amplitude must be >= 0");
  require(finite_nonneg(suspension_lag), "suspension_lag must be >= 0");
  require(finite_nonneg(noise.accel) && finite_nonneg(noise.angle) && finite_nonneg(noise.speed) &&
              finite_nonneg(noise.gps) && finite_nonneg(noise.profiler),
          "noise levels must be >= 0");
  require(std::isfinite(drift.base_altitude) && finite_nonneg(drift.step_sd), "invalid gps drift");
  require(std::isfinite(record_length) && record_length > 0.0, "record_length must be > 0");
  const std::size_t n = sample_count();
  require(n >= 32, "record must hold at least 32 samples");
  const double half = static_cast<double>(n / 2) * sampling_interval;
  require(half > crest_half_width + approach_length, "record_length must cover the whole crossing");
  require(n / 2 >= profiler_trim_max + 16, "profiler_trim_max leaves too little record around the crest");
}

ProfilePoint true_profile(const SceneConfig& cfg, double x) {
  const double h = cfg.hump_height;
  const double c = cfg.crest_half_width;
  const double a = cfg.approach_length;
  const double k = cfg.crest_drop * h / (c * c);
  const double ax = std::abs(x);
  const double sign = x < 0.0 ? -1.0 : 1.0;
  if (ax <= c) return {h - k * x * x, -2.0 * k * x, -2.0 * k};
  if (ax >= c + a) return {0.0, 0.0, 0.0};
  const double y0 = h - k * c * c;
  const double m0 = -2.0 * k * c * a;  // edge slope in units of t
  const double t = (ax - c) / a;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double y = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0;
  const double dy = (6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * m0;
  const double d2y = (12 * t - 6) * y0 + (6 * t - 4) * m0;
  return {y, sign * dy / a, d2y / (a * a)};
}

RawCrossingRecord synthesize_crossing(const SceneConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.rng_seed);
  const std::size_t n = cfg.sample_count();
  const std::size_t half = n / 2;
  const double ds = cfg.sampling_interval;
  const double v0 = cfg.speed_kmh / 3.6;
  const double two_pi = 2.0 * std::numbers::pi;
  const double speed_phase = rng.uniform(0.0, two_pi);
  const double roll_phase = rng.uniform(0.0, two_pi);
  constexpr double kSpeedWavelength = 40.0;
  constexpr double kRollWavelength = 25.0;

  RawCrossingRecord rec;
  rec.crossing_id = cfg.crossing_id;
  rec.collection_speed_kmh = cfg.speed_kmh;
  rec.sampling_interval_m = ds;
  rec.imu_gps = Matrix(n, kRawChannelCount);
  std::vector<double> truth(n);

  const SensorNoise& noise = cfg.noise;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (static_cast<double>(i) - static_cast<double>(half)) * ds;
    const double pos = static_cast<double>(i) * ds;
    const ProfilePoint p = true_profile(cfg, x);
    truth[i] = p.elevation;
    const double w = two_pi / kSpeedWavelength;
    const double v = v0 * (1.0 + cfg.speed_variation * std::sin(w * pos + speed_phase));
    const double dv_dx = v0 * cfg.speed_variation * w * std::cos(w * pos + speed_phase);
    const double pitch = std::atan(p.slope);
    const double roll = cfg.roll_amplitude * std::sin(two_pi / kRollWavelength * pos + roll_phase);

    auto row = rec.imu_gps.row(i);
    row[kAccelX] = v * dv_dx + kGravity * std::sin(pitch) + rng.normal(0.0, noise.accel);
    row[kAccelY] = kGravity * std::sin(roll) + rng.normal(0.0, noise.accel);
    row[kAccelZ] = kGravity * std::cos(pitch) + v * v * p.curvature + rng.normal(0.0, noise.accel);
    row[kRoll] = roll + rng.normal(0.0, noise.angle);
    row[kPitch] = pitch + rng.normal(0.0, noise.angle);
    row[kSpeed] = std::max(v + rng.normal(0.0, noise.speed), 1e-3);
  }

  // GPS: antenna lag behind the road surface, random-walk bias, white noise.
  const double alpha = ds / (ds + cfg.suspension_lag);
  double body = truth[0];
  double bias = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    body += alpha * (truth[i] - body);
    bias += rng.normal(0.0, cfg.drift.step_sd);
    rec.imu_gps(i, kGpsAltitude) = cfg.drift.base_altitude + body + bias + rng.normal(0.0, noise.gps);
  }

  const std::size_t lead = rng.uniform_index(cfg.profiler_trim_max + 1);
  const std::size_t tail = rng.uniform_index(cfg.profiler_trim_max + 1);
  rec.profiler.reserve(n - lead - tail);
  for (std::size_t i = lead; i < n - tail; ++i) {
    rec.profiler.push_back(truth[i] + rng.normal(0.0, noise.profiler));
  }
  return rec;
}

nlohmann::json SceneConfig::to_json() const {
  return {
      {"crossing_id", crossing_id},
      {"hump_height", hump_height},
      {"approach_length", approach_length},
      {"crest_half_width", crest_half_width},
      {"crest_drop", crest_drop},
      {"sampling_interval", sampling_interval},
      {"record_length", record_length},
      {"speed_kmh", speed_kmh},
      {"speed_variation", speed_variation},
      {"roll_amplitude", roll_amplitude},
      {"suspension_lag", suspension_lag},
      {"profiler_trim_max", profiler_trim_max},
      {"noise",
       {{"accel", noise.accel},
        {"angle", noise.angle},
        {"speed", noise.speed},
        {"gps", noise.gps},
        {"profiler", noise.profiler}}},
      {"gps_drift", {{"base_altitude", drift.base_altitude}, {"step_sd", drift.step_sd}}},
      {"rng_seed", rng_seed},
  };
}

SceneConfig SceneConfig::from_json(const nlohmann::json& j) {
  SceneConfig cfg;
  JsonFields(j, "scene config")
      .read("crossing_id", cfg.crossing_id)
      .read("hump_height", cfg.hump_height)
      .read("approach_length", cfg.approach_length)
      .read("crest_half_width", cfg.crest_half_width)
      .read("crest_drop", cfg.crest_drop)
      .read("sampling_interval", cfg.sampling_interval)
      .read("record_length", cfg.record_length)
      .read("speed_kmh", cfg.speed_kmh)
      .read("speed_variation", cfg.speed_variation)
      .read("roll_amplitude", cfg.roll_amplitude)
      .read("suspension_lag", cfg.suspension_lag)
      .read("profiler_trim_max", cfg.profiler_trim_max)
      .nested("noise",
              [&cfg](const nlohmann::json& n) {
                JsonFields(n, "scene config noise")
                    .read("accel", cfg.noise.accel)
                    .read("angle", cfg.noise.angle)
                    .read("speed", cfg.noise.speed)
                    .read("gps", cfg.noise.gps)
                    .read("profiler", cfg.noise.profiler)
                    .finish();
              })
      .nested("gps_drift",
              [&cfg](const nlohmann::json& d) {
                JsonFields(d, "scene config gps_drift")
                    .read("base_altitude", cfg.drift.base_altitude)
                    .read("step_sd", cfg.drift.step_sd)
                    .finish();
              })
      .read("rng_seed", cfg.rng_seed)
      .finish();
  return cfg;
}

void SynthesisPlan::validate() const {
  auto range = [](double lo, double hi, const char* name) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo <= hi)) {
      throw ConfigError(std::string("synthesis plan: invalid ") + name + " range");
    }
  };
  range(hump_height_min, hump_height_max, "hump_height");
  range(approach_length_min, approach_length_max, "approach_length");
  range(crest_half_width_min, crest_half_width_max, "crest_half_width");
  range(speed_kmh_min, speed_kmh_max, "speed_kmh");
  // Corner cases of the ranges must themselves be valid scenes.
  SceneConfig probe = base;
  probe.hump_height = hump_height_min;
  probe.approach_length = approach_length_max;
  probe.crest_half_width = crest_half_width_min;
  probe.speed_kmh = speed_kmh_min;
  probe.validate();
  probe.hump_height = hump_height_max;
  probe.speed_kmh = speed_kmh_max;
  probe.validate();
}

nlohmann::json SynthesisPlan::to_json() const {
  return {
      {"base", base.to_json()},
      {"hump_height", {hump_height_min, hump_height_max}},
      {"approach_length", {approach_length_min, approach_length_max}},
      {"crest_half_width", {crest_half_width_min, crest_half_width_max}},
      {"speed_kmh", {speed_kmh_min, speed_kmh_max}},
      {"id_prefix", id_prefix},
  };
}

SynthesisPlan SynthesisPlan::from_json(const nlohmann::json& j) {
  SynthesisPlan plan;
  auto pair = [](double& lo, double& hi, const char* name) {
    return [&lo, &hi, name](const nlohmann::json& v) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(std::string("synthesis plan: '") + name + "' must be [min, max]");
      }
      lo = v[0].get<double>();
      hi = v[1].get<double>();
    };
  };
  JsonFields(j, "synthesis plan")
      .nested("base", [&plan](const nlohmann::json& b) { plan.base = SceneConfig::from_json(b); })
      .nested("hump_height", pair(plan.hump_height_min, plan.hump_height_max, "hump_height"))
      .nested("approach_length", pair(plan.approach_length_min, plan.approach_length_max, "approach_length"))
      .nested("crest_half_width", pair(plan.crest_half_width_min, plan.crest_half_width_max, "crest_half_width"))
      .nested("speed_kmh", pair(plan.speed_kmh_min, plan.speed_kmh_max, "speed_kmh"))
      .read("id_prefix", plan.id_prefix)
      .finish();
  return plan;
}

SceneConfig scene_for_index(const SynthesisPlan& plan, std::uint64_t seed, std::size_t index) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(index)));
  SceneConfig cfg = plan.base;
  cfg.hump_height = rng.uniform(plan.hump_height_min, plan.hump_height_max);
  cfg.approach_length = rng.uniform(plan.approach_length_min, plan.approach_length_max);
  cfg.crest_half_width = rng.uniform(plan.crest_half_width_min, plan.crest_half_width_max);
  cfg.speed_kmh = rng.uniform(plan.speed_kmh_min, plan.speed_kmh_max);
  cfg.rng_seed = rng.next_u64();
  char id[32];
  std::snprintf(id, sizeof id, "%04zu", index);
  cfg.crossing_id = plan.id_prefix + id;
  return cfg;
}

std::vector<RawCrossingRecord> synthesize_batch(const SynthesisPlan& plan, std::size_t count, std::uint64_t seed,
                                                std::size_t first_index) {
  plan.validate();
  std::vector<RawCrossingRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(synthesize_crossing(scene_for_index(plan, seed, first_index + i)));
  }
  return out;
}

}  // namespace hrgc
