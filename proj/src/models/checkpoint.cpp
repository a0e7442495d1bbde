#include "hrgc/models/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "hrgc/errors.hpp"

namespace hrgc {

namespace {

constexpr std::array<char, 4> kMagic{'H', 'L', 'T', 'X'};

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return value;
}

template <typename T>
void put(std::string& out, T value) {
  const auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(to_little_endian(value));
  out.append(bytes.data(), bytes.size());
}

template <typename T>
T take(const std::string& in, std::size_t& offset) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), in.data() + offset, sizeof(T));
  offset += sizeof(T);
  return to_little_endian(std::bit_cast<T>(bytes));
}

}  // namespace

template <typename Real>
void save_checkpoint(const HybridModel<Real>& model, const std::filesystem::path& path,
                     const nlohmann::json& metadata) {
  nlohmann::json header = model.spec.to_json();
  if (!metadata.is_null()) header["metadata"] = metadata;
  const std::string header_text = header.dump();

  std::string blob(kMagic.begin(), kMagic.end());
  put<std::uint32_t>(blob, kCheckpointVersion);
  put<std::uint32_t>(blob, static_cast<std::uint32_t>(header_text.size()));
  blob += header_text;
  for (const auto& named : model.named_parameters()) {
    for (Real v : named.tensor.values()) put<double>(blob, static_cast<double>(v));
  }

  // Written beside the target and renamed so readers never see a partial file.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

template <typename Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint " + path.string());
  const std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = "checkpoint " + path.string() + ": ";

  if (blob.size() < 12 || !std::equal(kMagic.begin(), kMagic.end(), blob.begin())) {
    throw LoadError(where + "missing HLTX magic");
  }
  std::size_t offset = 4;
  const auto version = take<std::uint32_t>(blob, offset);
  if (version != kCheckpointVersion) {
    throw LoadError(where + "expected version " + std::to_string(kCheckpointVersion) + ", found version " +
                    std::to_string(version));
  }
  const auto header_size = take<std::uint32_t>(blob, offset);
  if (blob.size() - offset < header_size) throw LoadError(where + "truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob.substr(offset, header_size));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(where + "malformed header: " + e.what());
  }
  offset += header_size;

  Checkpoint<Real> result;
  if (header.contains("metadata")) {
    result.metadata = header["metadata"];
    header.erase("metadata");
  }
  ModelSpec spec;
  try {
    spec = ModelSpec::from_json(header);
  } catch (const ConfigError& e) {
    throw LoadError(where + e.what());
  }

  HybridModel<Real> model = HybridModel<Real>::build(spec, 0);
  const std::size_t expected = model.param_count() * sizeof(double);
  if (blob.size() - offset != expected) {
    throw LoadError(where + "expected " + std::to_string(expected) + " parameter bytes, found " +
                    std::to_string(blob.size() - offset));
  }
  for (auto& named : model.named_parameters()) {
    for (Real& v : named.tensor.mutable_values()) v = static_cast<Real>(take<double>(blob, offset));
  }
  result.model = std::move(model);
  return result;
}

template void save_checkpoint(const HybridModel<float>&, const std::filesystem::path&, const nlohmann::json&);
template void save_checkpoint(const HybridModel<double>&, const std::filesystem::path&, const nlohmann::json&);
template Checkpoint<float> load_checkpoint<float>(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace hrgc
