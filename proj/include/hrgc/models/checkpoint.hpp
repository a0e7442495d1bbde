#pragma once

#include <cstdint>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "hrgc/models/hybrid_model.hpp"

namespace hrgc {

// Layout (all integers little-endian):
//   "HLTX" | u32 version | u32 header length | header JSON (UTF-8)
//   | parameters in declaration order as f64
// The header is the model spec object; free-form run metadata such as the
// standardization statistics travels under its "metadata" key.
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename Real>
struct Checkpoint {
  HybridModel<Real> model;
  nlohmann::json metadata;
};

template <typename Real>
void save_checkpoint(const HybridModel<Real>& model, const std::filesystem::path& path,
                     const nlohmann::json& metadata = nullptr);

// Throws LoadError on a bad magic, version mismatch, malformed header or a
// parameter block of the wrong size. Nothing is returned on failure.
template <typename Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& path);

}  // namespace hrgc
