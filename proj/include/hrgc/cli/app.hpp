#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hrgc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Record of one command invocation, written next to its outputs. Everything
/// except `duration_s` is a pure function of the arguments and inputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  // Command-specific summary, e.g. split counts.
  nlohmann::json results;
  double duration_s = 0.0;

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& path) const;
};

std::string version();

/// Entry point of the `crossing_profiler` tool. `args` excludes the program
/// name. Data goes to `out` only when an output path is "-"; diagnostics go
/// to `err`. Returns 0 on success, 1 on domain errors and 2 on I/O or usage
/// errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hrgc::cli
