#pragma once

// Reference planner: a deterministic function from the environment, the
// household and the knowledge base to a ControlPlan and its ReasoningChain.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "airsteward/knowledge.hpp"
#include "airsteward/profile.hpp"
#include "airsteward/schema.hpp"

namespace airsteward::planner {

struct EnvInput {
  OutdoorWeather outdoor;
  SensorSnapshot indoor;
  Season season = Season::Spring;

  bool operator==(const EnvInput&) const = default;
};

/// Season comes from the outdoor timestamp and the kb hemisphere.
EnvInput make_env(const OutdoorWeather& outdoor, const SensorSnapshot& indoor,
                  const KnowledgeBase& kb);

struct KbFlags {
  std::optional<bool> epidemic_active;
  bool operator==(const KbFlags&) const = default;
};

/// One input tuple, shared by the planner CLI, the simulator and the corpus.
struct Scenario {
  std::string id;
  OutdoorWeather outdoor;
  SensorSnapshot indoor;
  profile::Household household;
  DeviceState device;
  KbFlags kb_flags;
};

/// {id?, env: {outdoor, indoor}, household: {members: [{group, preference?,
/// conditions?}]}, device, kb_flags?: {epidemic_active?}}. Conditions are
/// stamped with the outdoor timestamp.
Scenario scenario_from_json(const nlohmann::json& j, const std::string& path = "");
nlohmann::json to_json(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);

KnowledgeBase with_flags(KnowledgeBase kb, const KbFlags& flags);
EnvInput make_env(const Scenario& s, const KnowledgeBase& kb);

/// Household and calendar facts the planner and the evaluator both rely on.
struct Assessment {
  Season season = Season::Spring;
  ComfortBand band;
  double offset = 0.0;  // applied preference offset
  bool epidemic = false;
  bool respiratory = false;
  bool asthma = false;
  bool very_cold = false;
  bool vulnerable = false;
  std::vector<HealthCondition> conditions;  // sorted, unique
};

Assessment assess(const EnvInput& env, const profile::Household& household, const KnowledgeBase& kb);

/// A reason to warn the user. Sensor keys: co2, pm25, tvoc, hcho,
/// humidity_low, humidity_high. Also condition wire names and "epidemic".
struct Risk {
  std::string key;
  double value = 0.0;
  double threshold = 0.0;
  bool operator==(const Risk&) const = default;
};

std::vector<Risk> sensor_risks(const SensorSnapshot& indoor, const Thresholds& t);
std::vector<Risk> triggered_risks(const SensorSnapshot& indoor, const Thresholds& t,
                                  const Assessment& a);

/// Word a text must contain to count as mentioning the risk ("formaldehyde").
std::string_view risk_keyword(std::string_view key);

/// Trimmed fixed-point rendering used in every generated text ("0.064", "800").
std::string format_number(double v);

Thresholds derive_thresholds(const profile::Household& household, const KnowledgeBase& kb);
AuxMap<IntervalSpec> schedule_intervals(const Command& draft, const KnowledgeBase& kb);
std::string compose_tips(const std::vector<Risk>& risks, const KnowledgeBase& kb);

struct PlanOutput {
  ControlPlan plan;
  ReasoningChain chain;
  bool operator==(const PlanOutput&) const = default;
};

PlanOutput plan(const EnvInput& env, const profile::Household& household, const DeviceState& device,
                const KnowledgeBase& kb);
/// Applies the scenario's kb_flags first.
PlanOutput plan(const Scenario& s, const KnowledgeBase& kb);

}  // namespace airsteward::planner
