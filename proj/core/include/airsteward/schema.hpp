#pragma once

// Canonical domain types shared by every module. All types are plain values.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace airsteward {

enum class PopulationGroup { AdultMale, AdultFemale, Child, Elderly, Other };

/// Ordered from most cold-sensitive to most heat-sensitive.
enum class ThermalPreference {
  VeryColdSensitive,
  SlightlyColdSensitive,
  Neutral,
  SlightlyHeatSensitive,
  VeryHeatSensitive
};

enum class HealthCondition { Cold, Fever, Cough, Rhinitis, Asthma, Menstruation };

enum class TagAction { AddCondition, RemoveCondition, SetPreference, SetGroupInfo };

enum class Mode { Cool, Heat, FanOnly, Dehumidify, Auto };
enum class WindSpeed { Low, Medium, High, Auto };
enum class WindSensation { Normal, NoWind, SoftWind };
enum class AddonLevel { Off, Low, Medium, High };
enum class Auxiliary { AirFresh, AirPurification, AirHumidification, AirSterilization };
enum class Season { Spring, Summer, Autumn, Winter };

// ---------------------------------------------------------------------------
// Enum wire names (lowercase snake_case, stable).

template <typename E>
struct EnumNames;

template <>
struct EnumNames<PopulationGroup> {
  static constexpr std::array<std::string_view, 5> values{"adult_male", "adult_female", "child",
                                                          "elderly", "other"};
};
template <>
struct EnumNames<ThermalPreference> {
  static constexpr std::array<std::string_view, 5> values{
      "very_cold_sensitive", "slightly_cold_sensitive", "neutral", "slightly_heat_sensitive",
      "very_heat_sensitive"};
};
template <>
struct EnumNames<HealthCondition> {
  static constexpr std::array<std::string_view, 6> values{"cold",     "fever",  "cough",
                                                          "rhinitis", "asthma", "menstruation"};
};
template <>
struct EnumNames<TagAction> {
  static constexpr std::array<std::string_view, 4> values{"add_condition", "remove_condition",
                                                          "set_preference", "set_group_info"};
};
template <>
struct EnumNames<Mode> {
  static constexpr std::array<std::string_view, 5> values{"cool", "heat", "fan_only",
                                                          "dehumidify", "auto"};
};
template <>
struct EnumNames<WindSpeed> {
  static constexpr std::array<std::string_view, 4> values{"low", "medium", "high", "auto"};
};
template <>
struct EnumNames<WindSensation> {
  static constexpr std::array<std::string_view, 3> values{"normal", "no_wind", "soft_wind"};
};
template <>
struct EnumNames<AddonLevel> {
  static constexpr std::array<std::string_view, 4> values{"off", "low", "medium", "high"};
};
template <>
struct EnumNames<Auxiliary> {
  static constexpr std::array<std::string_view, 4> values{"air_fresh", "air_purification",
                                                          "air_humidification",
                                                          "air_sterilization"};
};
template <>
struct EnumNames<Season> {
  static constexpr std::array<std::string_view, 4> values{"spring", "summer", "autumn",
                                                          "winter"};
};

template <typename E>
inline constexpr std::size_t enum_count = EnumNames<E>::values.size();

template <typename E>
constexpr std::string_view to_string(E value) {
  return EnumNames<E>::values[static_cast<std::size_t>(value)];
}

template <typename E>
constexpr std::optional<E> enum_from_string(std::string_view name) {
  for (std::size_t i = 0; i < enum_count<E>; ++i) {
    if (EnumNames<E>::values[i] == name) return static_cast<E>(i);
  }
  return std::nullopt;
}

/// Every variant of E in declaration order.
template <typename E>
constexpr std::array<E, enum_count<E>> all_values() {
  std::array<E, enum_count<E>> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<E>(i);
  return out;
}

inline constexpr auto kAuxiliaries = all_values<Auxiliary>();

/// Cold, Fever, Cough, Rhinitis and Asthma; Menstruation is not respiratory.
constexpr bool is_respiratory(HealthCondition c) { return c != HealthCondition::Menstruation; }

/// Human-readable name of an auxiliary function ("air purification").
std::string_view display_name(Auxiliary aux);

/// Fixed-size map keyed by Auxiliary; always holds exactly four entries.
template <typename T>
struct AuxMap {
  std::array<T, 4> values{};

  T& operator[](Auxiliary a) { return values[static_cast<std::size_t>(a)]; }
  const T& operator[](Auxiliary a) const { return values[static_cast<std::size_t>(a)]; }
  bool operator==(const AuxMap&) const = default;
};

// ---------------------------------------------------------------------------
// Records and snapshots.

struct MemoryTagRecord {
  PopulationGroup group = PopulationGroup::Other;
  std::optional<HealthCondition> condition;
  std::optional<ThermalPreference> preference;
  TagAction action = TagAction::AddCondition;
  std::string source_utterance_id;

  bool operator==(const MemoryTagRecord&) const = default;
};

struct SensorSnapshot {
  double temperature_c = 24.0;
  double humidity_pct = 50.0;
  double co2_ppm = 600.0;
  double tvoc_mg_m3 = 0.2;
  double pm25_ug_m3 = 10.0;
  double hcho_mg_m3 = 0.03;

  bool operator==(const SensorSnapshot&) const = default;
};

struct OutdoorWeather {
  std::string city;
  std::string timestamp;  // ISO-8601 UTC, validated on decode
  double temperature_c = 20.0;
  double humidity_pct = 50.0;
  double pm25_ug_m3 = 20.0;

  bool operator==(const OutdoorWeather&) const = default;
};

struct DeviceState {
  std::string location = "living room";
  bool power = false;
  Mode mode = Mode::Auto;
  std::optional<double> setpoint_c;
  WindSpeed wind_speed = WindSpeed::Auto;
  WindSensation wind_sensation = WindSensation::Normal;
  AuxMap<AddonLevel> addon_levels{};

  bool operator==(const DeviceState&) const = default;
};

// ---------------------------------------------------------------------------
// Control plan.

struct Continuous {
  bool operator==(const Continuous&) const = default;
};

/// Run for run_minutes, then rest until period_minutes have elapsed; repeat.
struct DutyCycle {
  int run_minutes = 0;
  int period_minutes = 0;
  bool operator==(const DutyCycle&) const = default;
};

/// monostate = no schedule.
using IntervalSpec = std::variant<std::monostate, Continuous, DutyCycle>;

inline bool has_interval(const IntervalSpec& spec) {
  return !std::holds_alternative<std::monostate>(spec);
}

struct Command {
  Mode mode = Mode::Auto;
  std::optional<double> setpoint_c;
  WindSpeed wind_speed = WindSpeed::Auto;
  WindSensation wind_sensation = WindSensation::Normal;
  AuxMap<AddonLevel> aux{};
  std::string tips;

  bool operator==(const Command&) const = default;
};

struct Thresholds {
  double co2_ppm = 800.0;
  double pm25_ug_m3 = 15.0;
  double tvoc_mg_m3 = 0.6;
  double formaldehyde_mg_m3 = 0.08;
  double humidity_lower_pct = 40.0;
  double humidity_upper_pct = 60.0;

  bool operator==(const Thresholds&) const = default;
};

struct ControlPlan {
  Command cmd;
  Thresholds threshold;
  AuxMap<IntervalSpec> interval_time{};

  bool operator==(const ControlPlan&) const = default;
};

/// The five-step explanation that accompanies a plan.
struct ReasoningChain {
  std::string perception;
  std::string goals;
  std::string quantitative_targets;
  std::string strategy;
  std::string scheduling;

  bool operator==(const ReasoningChain&) const = default;
};

// ---------------------------------------------------------------------------
// Validation.

struct Violation {
  std::string code;   // e.g. "setpoint-in-fanonly"
  std::string field;  // e.g. "cmd.setpoint_c"
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(std::string_view code) const;
};

/// Reports every plan invariant violation. Never throws.
ValidationReport validate_plan(const ControlPlan& plan);

/// Reports action/payload mismatches of a tag record.
ValidationReport validate_record(const MemoryTagRecord& record);

/// Number of entries in plan_attribute_vector().
inline constexpr std::size_t kPlanAttributeCount = 19;

/// The rubric-named plan attributes in fixed order: 9 cmd fields, 6 thresholds,
/// 4 intervals. Values are the canonical JSON encoding of each field.
std::vector<std::pair<std::string, nlohmann::json>> plan_attribute_vector(const ControlPlan& plan);

}  // namespace airsteward
