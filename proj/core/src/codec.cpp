#include "airsteward/codec.hpp"

#include <fmt/format.h>

#include "airsteward/json_reader.hpp"
#include "airsteward/time.hpp"

namespace airsteward {

using nlohmann::json;

namespace {

json aux_levels_to_json(const AuxMap<AddonLevel>& levels) {
  json out = json::object();
  for (Auxiliary aux : kAuxiliaries) out[std::string(to_string(aux))] = to_string(levels[aux]);
  return out;
}

AuxMap<AddonLevel> aux_levels_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  AuxMap<AddonLevel> out;
  for (Auxiliary aux : kAuxiliaries) out[aux] = r.enumeration<AddonLevel>(to_string(aux));
  r.finish();
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Encoders.

json to_json(const MemoryTagRecord& record) {
  json out = {{"group", to_string(record.group)},
              {"action", to_string(record.action)},
              {"source_utterance_id", record.source_utterance_id}};
  if (record.condition) out["condition"] = to_string(*record.condition);
  if (record.preference) out["preference"] = to_string(*record.preference);
  return out;
}

json to_json(const SensorSnapshot& s) {
  return {{"temperature_c", s.temperature_c}, {"humidity_pct", s.humidity_pct},
          {"co2_ppm", s.co2_ppm},             {"tvoc_mg_m3", s.tvoc_mg_m3},
          {"pm25_ug_m3", s.pm25_ug_m3},       {"hcho_mg_m3", s.hcho_mg_m3}};
}

json to_json(const OutdoorWeather& w) {
  return {{"city", w.city},
          {"timestamp", w.timestamp},
          {"temperature_c", w.temperature_c},
          {"humidity_pct", w.humidity_pct},
          {"pm25_ug_m3", w.pm25_ug_m3}};
}

json to_json(const DeviceState& d) {
  json out = {{"location", d.location},
              {"power", d.power},
              {"mode", to_string(d.mode)},
              {"wind_speed", to_string(d.wind_speed)},
              {"wind_sensation", to_string(d.wind_sensation)},
              {"addon_levels", aux_levels_to_json(d.addon_levels)}};
  if (d.setpoint_c) out["setpoint_c"] = *d.setpoint_c;
  return out;
}

json to_json(const IntervalSpec& interval) {
  if (std::holds_alternative<Continuous>(interval)) return "continuous";
  if (const auto* duty = std::get_if<DutyCycle>(&interval)) {
    return {{"run_minutes", duty->run_minutes}, {"period_minutes", duty->period_minutes}};
  }
  return nullptr;
}

json to_json(const Thresholds& t) {
  return {{"co2_ppm", t.co2_ppm},
          {"pm25_ug_m3", t.pm25_ug_m3},
          {"tvoc_mg_m3", t.tvoc_mg_m3},
          {"formaldehyde_mg_m3", t.formaldehyde_mg_m3},
          {"humidity_lower_pct", t.humidity_lower_pct},
          {"humidity_upper_pct", t.humidity_upper_pct}};
}

json to_json(const ControlPlan& plan) {
  const Command& c = plan.cmd;
  json cmd = {{"mode", to_string(c.mode)},
              {"wind_speed", to_string(c.wind_speed)},
              {"wind_sensation", to_string(c.wind_sensation)},
              {"tips", c.tips}};
  if (c.setpoint_c) cmd["setpoint_c"] = *c.setpoint_c;
  for (Auxiliary aux : kAuxiliaries) cmd[std::string(to_string(aux))] = to_string(c.aux[aux]);

  json intervals = json::object();
  for (Auxiliary aux : kAuxiliaries) {
    intervals[std::string(to_string(aux))] = to_json(plan.interval_time[aux]);
  }
  return {{"cmd", std::move(cmd)},
          {"threshold", to_json(plan.threshold)},
          {"interval_time", std::move(intervals)}};
}

json to_json(const ReasoningChain& chain) {
  return {{"perception", chain.perception},
          {"goals", chain.goals},
          {"quantitative_targets", chain.quantitative_targets},
          {"strategy", chain.strategy},
          {"scheduling", chain.scheduling}};
}

// ---------------------------------------------------------------------------
// Decoders.

MemoryTagRecord record_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  MemoryTagRecord out;

  // Accept the camelCase names some model outputs use.
  auto pick = [&](std::initializer_list<std::string_view> keys) -> std::string_view {
    for (auto k : keys) {
      if (r.contains(k)) return k;
    }
    return *keys.begin();
  };

  out.group = r.enumeration<PopulationGroup>(pick({"group", "populationGroup"}));
  out.condition = r.optional_enumeration<HealthCondition>(pick({"condition", "physicalCondition"}));
  out.preference = r.optional_enumeration<ThermalPreference>(
      pick({"preference", "hotColdPreference", "hotcoldPreference"}));

  const std::string action = r.string("action");
  if (action == "delete_condition" || action == "delete/_condition") {
    out.action = TagAction::RemoveCondition;
  } else if (auto parsed = enum_from_string<TagAction>(action)) {
    out.action = *parsed;
  } else {
    throw SchemaError(fmt::format("{} has unknown value '{}'", r.field("action"), action),
                      r.field("action"));
  }
  if (const auto* id = r.optional("source_utterance_id")) {
    out.source_utterance_id = ObjectReader::as_string(*id, r.field("source_utterance_id"));
  }
  r.finish();

  const auto report = validate_record(out);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw SchemaError(fmt::format("{}: {}", r.field(v.field), v.message), r.field(v.field));
  }
  return out;
}

SensorSnapshot sensors_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  SensorSnapshot s;
  s.temperature_c = r.number("temperature_c");
  s.humidity_pct = r.non_negative("humidity_pct");
  if (s.humidity_pct > 100.0) {
    throw SchemaError(fmt::format("{} must be within [0, 100]", r.field("humidity_pct")),
                      r.field("humidity_pct"));
  }
  s.co2_ppm = r.non_negative("co2_ppm");
  s.tvoc_mg_m3 = r.non_negative("tvoc_mg_m3");
  s.pm25_ug_m3 = r.non_negative("pm25_ug_m3");
  s.hcho_mg_m3 = r.non_negative("hcho_mg_m3");
  r.finish();
  return s;
}

OutdoorWeather weather_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  OutdoorWeather w;
  w.city = r.string("city");
  w.timestamp = r.string("timestamp");
  try {
    parse_timestamp(w.timestamp);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(fmt::format("{}: {}", r.field("timestamp"), e.what()), r.field("timestamp"));
  }
  w.temperature_c = r.number("temperature_c");
  w.humidity_pct = r.non_negative("humidity_pct");
  w.pm25_ug_m3 = r.non_negative("pm25_ug_m3");
  r.finish();
  return w;
}

DeviceState device_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  DeviceState d;
  d.location = r.string("location");
  d.power = r.boolean("power");
  d.mode = r.enumeration<Mode>("mode");
  d.setpoint_c = r.optional_number("setpoint_c");
  d.wind_speed = r.enumeration<WindSpeed>("wind_speed");
  d.wind_sensation = r.enumeration<WindSensation>("wind_sensation");
  d.addon_levels = aux_levels_from_json(r.required("addon_levels"), r.field("addon_levels"));
  r.finish();
  if (d.mode == Mode::FanOnly && d.setpoint_c) {
    throw SchemaError(fmt::format("{} must be absent in fan_only mode", r.field("setpoint_c")),
                      r.field("setpoint_c"));
  }
  return d;
}

IntervalSpec interval_from_json(const json& j, const std::string& path) {
  if (j.is_null()) return std::monostate{};
  if (j.is_string()) {
    if (j.get_ref<const std::string&>() == "continuous") return Continuous{};
    throw SchemaError(fmt::format("{} has unknown value '{}'", path, j.get<std::string>()), path);
  }
  ObjectReader r(j, path);
  DutyCycle duty;
  duty.run_minutes = r.integer("run_minutes");
  duty.period_minutes = r.integer("period_minutes");
  r.finish();
  if (duty.run_minutes <= 0 || duty.period_minutes < duty.run_minutes) {
    throw SchemaError(fmt::format("{} needs 0 < run_minutes <= period_minutes", path), path);
  }
  return duty;
}

Thresholds thresholds_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  Thresholds t;
  t.co2_ppm = r.positive("co2_ppm");
  t.pm25_ug_m3 = r.positive("pm25_ug_m3");
  t.tvoc_mg_m3 = r.positive("tvoc_mg_m3");
  t.formaldehyde_mg_m3 = r.positive("formaldehyde_mg_m3");
  t.humidity_lower_pct = r.positive("humidity_lower_pct");
  t.humidity_upper_pct = r.positive("humidity_upper_pct");
  r.finish();
  if (!(t.humidity_lower_pct < t.humidity_upper_pct) || t.humidity_upper_pct > 100.0) {
    throw SchemaError(fmt::format("{} must be below {} and within 100",
                                  r.field("humidity_lower_pct"), r.field("humidity_upper_pct")),
                      r.field("humidity_lower_pct"));
  }
  return t;
}

ControlPlan plan_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  ControlPlan plan;
  {
    const std::string cmd_path = r.field("cmd");
    ObjectReader c(r.required("cmd"), cmd_path);
    plan.cmd.mode = c.enumeration<Mode>("mode");
    plan.cmd.setpoint_c = c.optional_number("setpoint_c");
    plan.cmd.wind_speed = c.enumeration<WindSpeed>("wind_speed");
    plan.cmd.wind_sensation = c.enumeration<WindSensation>("wind_sensation");
    for (Auxiliary aux : kAuxiliaries) plan.cmd.aux[aux] = c.enumeration<AddonLevel>(to_string(aux));
    plan.cmd.tips = c.string("tips");
    c.finish();
  }
  plan.threshold = thresholds_from_json(r.required("threshold"), r.field("threshold"));
  {
    const std::string iv_path = r.field("interval_time");
    ObjectReader iv(r.required("interval_time"), iv_path);
    for (Auxiliary aux : kAuxiliaries) {
      const std::string key(to_string(aux));
      plan.interval_time[aux] = interval_from_json(iv.required(key), iv.field(key));
    }
    iv.finish();
  }
  r.finish();
  return plan;
}

ReasoningChain chain_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  ReasoningChain chain;
  chain.perception = r.string("perception");
  chain.goals = r.string("goals");
  chain.quantitative_targets = r.string("quantitative_targets");
  chain.strategy = r.string("strategy");
  chain.scheduling = r.string("scheduling");
  r.finish();
  return chain;
}

// ---------------------------------------------------------------------------

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
    throw DecodeError(fmt::format("malformed JSON at byte {}: {}", offset, e.what()), offset);
  }
}

std::string canonical_dump(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string encode_plan(const ControlPlan& plan) { return canonical_dump(to_json(plan)); }

ControlPlan decode_plan(std::string_view bytes) { return plan_from_json(parse_json(bytes)); }

std::string encode_record(const MemoryTagRecord& record) {
  return canonical_dump(to_json(record));
}

MemoryTagRecord decode_record(std::string_view bytes) {
  return record_from_json(parse_json(bytes));
}

}  // namespace airsteward
