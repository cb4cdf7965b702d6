#include "airsteward/schema.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "airsteward/codec.hpp"

namespace airsteward {

std::string_view display_name(Auxiliary aux) {
  switch (aux) {
    case Auxiliary::AirFresh:
      return "fresh air";
    case Auxiliary::AirPurification:
      return "air purification";
    case Auxiliary::AirHumidification:
      return "humidification";
    case Auxiliary::AirSterilization:
      return "sterilization";
  }
  return "unknown";
}

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.code == code; });
}

ValidationReport validate_plan(const ControlPlan& plan) {
  ValidationReport report;
  auto add = [&](std::string code, std::string field, std::string message) {
    report.violations.push_back({std::move(code), std::move(field), std::move(message)});
  };

  const Command& cmd = plan.cmd;
  if (cmd.mode == Mode::FanOnly && cmd.setpoint_c) {
    add("setpoint-in-fanonly", "cmd.setpoint_c", "fan-only mode must not carry a setpoint");
  }
  if (cmd.wind_sensation == WindSensation::NoWind && cmd.mode != Mode::Cool) {
    add("nowind-in-noncooling", "cmd.wind_sensation",
        fmt::format("no-wind sensation requires cool mode, got {}", to_string(cmd.mode)));
  }
  for (Auxiliary aux : kAuxiliaries) {
    if (cmd.aux[aux] != AddonLevel::Off && !has_interval(plan.interval_time[aux])) {
      add("addon-on-without-interval", fmt::format("interval_time.{}", to_string(aux)),
          fmt::format("{} is {} but has no interval", to_string(aux), to_string(cmd.aux[aux])));
    }
    if (const auto* duty = std::get_if<DutyCycle>(&plan.interval_time[aux])) {
      if (duty->run_minutes <= 0 || duty->period_minutes < duty->run_minutes) {
        add("interval-invalid", fmt::format("interval_time.{}", to_string(aux)),
            fmt::format("need 0 < run_minutes <= period_minutes, got {{{}, {}}}",
                        duty->run_minutes, duty->period_minutes));
      }
    }
  }

  const Thresholds& t = plan.threshold;
  const std::pair<const char*, double> positives[] = {
      {"threshold.co2_ppm", t.co2_ppm},
      {"threshold.pm25_ug_m3", t.pm25_ug_m3},
      {"threshold.tvoc_mg_m3", t.tvoc_mg_m3},
      {"threshold.formaldehyde_mg_m3", t.formaldehyde_mg_m3},
      {"threshold.humidity_lower_pct", t.humidity_lower_pct},
      {"threshold.humidity_upper_pct", t.humidity_upper_pct},
  };
  for (const auto& [field, value] : positives) {
    if (!(value > 0.0)) add("threshold-nonpositive", field, fmt::format("{} must be positive", field));
  }
  if (!(t.humidity_lower_pct < t.humidity_upper_pct)) {
    add("humidity-band-inverted", "threshold.humidity_lower_pct",
        "humidity_lower_pct must be below humidity_upper_pct");
  }
  if (t.humidity_upper_pct > 100.0) {
    add("humidity-out-of-range", "threshold.humidity_upper_pct",
        "humidity_upper_pct must not exceed 100");
  }
  return report;
}

ValidationReport validate_record(const MemoryTagRecord& record) {
  ValidationReport report;
  auto add = [&](std::string code, std::string field, std::string message) {
    report.violations.push_back({std::move(code), std::move(field), std::move(message)});
  };
  switch (record.action) {
    case TagAction::AddCondition:
    case TagAction::RemoveCondition:
      if (!record.condition) add("payload-missing", "condition", "condition actions need a condition");
      if (record.preference) add("payload-unexpected", "preference", "condition actions carry no preference");
      break;
    case TagAction::SetPreference:
      if (!record.preference) add("payload-missing", "preference", "set_preference needs a preference");
      if (record.condition) add("payload-unexpected", "condition", "set_preference carries no condition");
      break;
    case TagAction::SetGroupInfo:
      if (record.condition || record.preference) {
        add("payload-unexpected", "action", "set_group_info carries no payload");
      }
      break;
  }
  return report;
}

std::vector<std::pair<std::string, nlohmann::json>> plan_attribute_vector(const ControlPlan& plan) {
  const Command& cmd = plan.cmd;
  const Thresholds& t = plan.threshold;
  std::vector<std::pair<std::string, nlohmann::json>> out;
  out.reserve(kPlanAttributeCount);
  out.emplace_back("cmd.mode", to_string(cmd.mode));
  out.emplace_back("cmd.temperature",
                   cmd.setpoint_c ? nlohmann::json(*cmd.setpoint_c) : nlohmann::json(nullptr));
  out.emplace_back("cmd.wind_speed", to_string(cmd.wind_speed));
  out.emplace_back("cmd.wind_sensation", to_string(cmd.wind_sensation));
  for (Auxiliary aux : kAuxiliaries) {
    out.emplace_back(fmt::format("cmd.{}", to_string(aux)), to_string(cmd.aux[aux]));
  }
  out.emplace_back("cmd.tips", cmd.tips);
  out.emplace_back("threshold.CO2", t.co2_ppm);
  out.emplace_back("threshold.PM2.5", t.pm25_ug_m3);
  out.emplace_back("threshold.TVOC", t.tvoc_mg_m3);
  out.emplace_back("threshold.formaldehyde", t.formaldehyde_mg_m3);
  out.emplace_back("threshold.humidity_lower", t.humidity_lower_pct);
  out.emplace_back("threshold.humidity_upper", t.humidity_upper_pct);
  for (Auxiliary aux : kAuxiliaries) {
    out.emplace_back(fmt::format("interval_time.{}", to_string(aux)),
                     to_json(plan.interval_time[aux]));
  }
  return out;
}

}  // namespace airsteward
