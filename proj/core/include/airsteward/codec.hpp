#pragma once

// Canonical JSON wire format. Objects are key-sorted and compact, so the encoded
// bytes of equal values are identical.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "airsteward/schema.hpp"

namespace airsteward {

/// Input is not well-formed JSON. `offset` is the 0-based byte position.
class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Well-formed JSON that does not satisfy the schema. `field` is a dotted path.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& what, std::string field)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

nlohmann::json to_json(const MemoryTagRecord& record);
nlohmann::json to_json(const SensorSnapshot& snapshot);
nlohmann::json to_json(const OutdoorWeather& weather);
nlohmann::json to_json(const DeviceState& device);
nlohmann::json to_json(const IntervalSpec& interval);
nlohmann::json to_json(const Thresholds& thresholds);
nlohmann::json to_json(const ControlPlan& plan);
nlohmann::json to_json(const ReasoningChain& chain);

// The `path` argument prefixes field names in SchemaError messages.
MemoryTagRecord record_from_json(const nlohmann::json& j, const std::string& path = "");
SensorSnapshot sensors_from_json(const nlohmann::json& j, const std::string& path = "");
OutdoorWeather weather_from_json(const nlohmann::json& j, const std::string& path = "");
DeviceState device_from_json(const nlohmann::json& j, const std::string& path = "");
IntervalSpec interval_from_json(const nlohmann::json& j, const std::string& path = "");
Thresholds thresholds_from_json(const nlohmann::json& j, const std::string& path = "");
ControlPlan plan_from_json(const nlohmann::json& j, const std::string& path = "");
ReasoningChain chain_from_json(const nlohmann::json& j, const std::string& path = "");

/// Parses UTF-8 JSON text, mapping syntax errors to DecodeError.
nlohmann::json parse_json(std::string_view text);

/// Compact key-sorted JSON text.
std::string canonical_dump(const nlohmann::json& j);

std::string encode_plan(const ControlPlan& plan);
ControlPlan decode_plan(std::string_view bytes);

std::string encode_record(const MemoryTagRecord& record);
MemoryTagRecord decode_record(std::string_view bytes);

}  // namespace airsteward
