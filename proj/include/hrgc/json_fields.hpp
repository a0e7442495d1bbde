#pragma once

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "hrgc/errors.hpp"

namespace hrgc {

/// Strict reader for flat configuration objects: optional keys keep the
/// caller's defaults, wrong types and leftover unknown keys raise
/// ConfigError.
class JsonFields {
 public:
  JsonFields(const nlohmann::json& j, std::string context) : json_(j), context_(std::move(context)) {
    if (!j.is_object()) throw ConfigError(context_ + ": expected a JSON object");
  }

  template <typename T>
  JsonFields& read(const std::string& key, T& out) {
    seen_.insert(key);
    const auto it = json_.find(key);
    if (it == json_.end()) return *this;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(context_ + ": field '" + key + "' has the wrong type");
    }
    return *this;
  }

  // Hands a nested object to `parse` if present.
  template <typename F>
  JsonFields& nested(const std::string& key, F&& parse) {
    seen_.insert(key);
    const auto it = json_.find(key);
    if (it != json_.end()) parse(*it);
    return *this;
  }

  void finish() const {
    for (const auto& [key, value] : json_.items()) {
      if (!seen_.count(key)) throw ConfigError(context_ + ": unknown field '" + key + "'");
    }
  }

 private:
  const nlohmann::json& json_;
  std::string context_;
  std::set<std::string> seen_;
};

}  // namespace hrgc
