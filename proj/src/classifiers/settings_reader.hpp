#pragma once

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "doccat/common/error.hpp"

namespace doccat::classifiers::detail {

/// Typed access to a settings object that rejects unknown keys.
class SettingsReader {
 public:
  explicit SettingsReader(const nlohmann::json& j) : j_(j.is_null() ? nlohmann::json::object() : j) {
    if (!j_.is_object()) throw InvalidArgument("settings must be a JSON object or null");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw InvalidArgument("setting '" + key + "' has the wrong type");
    }
  }

  std::size_t read_size(const std::string& key, std::size_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw InvalidArgument("setting '" + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
  }

  const nlohmann::json& raw(const std::string& key) const { return j_.at(key); }

  /// Throws for keys never asked for.
  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw InvalidArgument("unknown setting '" + key + "'");
    }
  }

 private:
  nlohmann::json j_;
  std::set<std::string> seen_;
};

}  // namespace doccat::classifiers::detail
