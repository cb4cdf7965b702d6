#pragma once

// Strict reader for JSON objects: tracks the dotted path for error messages
// and rejects unknown keys on finish().

#include <optional>
#include <set>
#include <string>
#include <string_view>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "airsteward/codec.hpp"
#include "airsteward/schema.hpp"

namespace airsteward {

class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw SchemaError(fmt::format("{} must be an object", path_.empty() ? "document" : path_),
                        path_);
    }
  }

  std::string field(std::string_view key) const {
    return path_.empty() ? std::string(key) : fmt::format("{}.{}", path_, key);
  }

  bool contains(std::string_view key) const { return j_.contains(std::string(key)); }

  const nlohmann::json& required(std::string_view key) {
    auto it = j_.find(std::string(key));
    if (it == j_.end()) throw SchemaError(fmt::format("missing field {}", field(key)), field(key));
    seen_.insert(std::string(key));
    return *it;
  }

  /// nullptr when absent or JSON null.
  const nlohmann::json* optional(std::string_view key) {
    auto it = j_.find(std::string(key));
    if (it == j_.end()) return nullptr;
    seen_.insert(std::string(key));
    return it->is_null() ? nullptr : &*it;
  }

  double number(std::string_view key) { return as_number(required(key), field(key)); }

  double positive(std::string_view key) {
    const double v = number(key);
    if (!(v > 0.0)) throw SchemaError(fmt::format("{} must be positive", field(key)), field(key));
    return v;
  }

  double non_negative(std::string_view key) {
    const double v = number(key);
    if (!(v >= 0.0)) {
      throw SchemaError(fmt::format("{} must be non-negative", field(key)), field(key));
    }
    return v;
  }

  std::optional<double> optional_number(std::string_view key) {
    const auto* v = optional(key);
    if (!v) return std::nullopt;
    return as_number(*v, field(key));
  }

  std::string string(std::string_view key) { return as_string(required(key), field(key)); }

  bool boolean(std::string_view key) {
    const auto& v = required(key);
    if (!v.is_boolean()) throw SchemaError(fmt::format("{} must be a boolean", field(key)), field(key));
    return v.get<bool>();
  }

  int integer(std::string_view key) {
    const auto& v = required(key);
    if (!v.is_number_integer()) {
      throw SchemaError(fmt::format("{} must be an integer", field(key)), field(key));
    }
    return v.get<int>();
  }

  template <typename E>
  E enumeration(std::string_view key) {
    return as_enum<E>(required(key), field(key));
  }

  template <typename E>
  std::optional<E> optional_enumeration(std::string_view key) {
    const auto* v = optional(key);
    if (!v) return std::nullopt;
    return as_enum<E>(*v, field(key));
  }

  /// Marks `key` as known without reading it.
  void ignore(std::string_view key) { seen_.insert(std::string(key)); }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw SchemaError(fmt::format("unknown field {}", field(key)), field(key));
    }
  }

  static double as_number(const nlohmann::json& v, const std::string& field) {
    if (!v.is_number()) throw SchemaError(fmt::format("{} must be a number", field), field);
    return v.get<double>();
  }

  static std::string as_string(const nlohmann::json& v, const std::string& field) {
    if (!v.is_string()) throw SchemaError(fmt::format("{} must be a string", field), field);
    return v.get<std::string>();
  }

  template <typename E>
  static E as_enum(const nlohmann::json& v, const std::string& field) {
    if (!v.is_string()) throw SchemaError(fmt::format("{} must be a string", field), field);
    const auto parsed = enum_from_string<E>(v.get_ref<const std::string&>());
    if (!parsed) {
      throw SchemaError(
          fmt::format("{} has unknown value '{}'", field, v.get_ref<const std::string&>()), field);
    }
    return *parsed;
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace airsteward
