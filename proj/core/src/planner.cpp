#include "airsteward/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "airsteward/codec.hpp"
#include "airsteward/json_reader.hpp"

namespace airsteward::planner {

using nlohmann::json;

namespace {

std::string humanize(std::string_view wire) {
  std::string s(wire);
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

ThermalPreference effective_preference(const profile::MemberProfile& m) {
  auto p = static_cast<int>(m.preference);
  if (m.has(HealthCondition::Menstruation) && p > 0) --p;
  return static_cast<ThermalPreference>(p);
}

double round_half(double v) { return std::round(v * 2.0) / 2.0; }
double round_micro(double v) { return std::round(v * 1e6) / 1e6; }

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string interval_text(const IntervalSpec& spec) {
  if (std::holds_alternative<Continuous>(spec)) return "continuous";
  const auto& d = std::get<DutyCycle>(spec);
  return fmt::format("{} min every {} min", d.run_minutes, d.period_minutes);
}

std::string describe_member(const profile::MemberProfile& m) {
  std::vector<std::string> parts{humanize(to_string(m.preference))};
  for (const auto& [c, at] : m.conditions) parts.push_back(std::string(to_string(c)));
  return fmt::format("{} ({})", humanize(to_string(m.group)), join(parts, "; "));
}

ReasoningChain build_chain(const EnvInput& env, const profile::Household& household,
                           const DeviceState& device, const Assessment& a, const ControlPlan& p) {
  const auto& s = env.indoor;
  const auto& t = p.threshold;
  ReasoningChain chain;

  std::vector<std::string> exceeded;
  for (const auto& r : sensor_risks(s, t)) exceeded.push_back(std::string(risk_keyword(r.key)));
  std::vector<std::string> members;
  for (const auto& [g, m] : household.members) members.push_back(describe_member(m));
  chain.perception = fmt::format(
      "Indoor {}°C, humidity {}%, CO2 {} ppm, TVOC {} mg/m³, PM2.5 {} µg/m³, formaldehyde {} mg/m³{}. "
      "Outdoor in {}: {}°C, humidity {}%, PM2.5 {} µg/m³ at {} ({}). Household: {}. {}. "
      "Device in {} is {} in {} mode.",
      format_number(s.temperature_c), format_number(s.humidity_pct), format_number(s.co2_ppm),
      format_number(s.tvoc_mg_m3), format_number(s.pm25_ug_m3), format_number(s.hcho_mg_m3),
      exceeded.empty() ? std::string() : "; out of range: " + join(exceeded, ", "),
      env.outdoor.city.empty() ? "unknown city" : env.outdoor.city,
      format_number(env.outdoor.temperature_c), format_number(env.outdoor.humidity_pct),
      format_number(env.outdoor.pm25_ug_m3), env.outdoor.timestamp, to_string(a.season),
      members.empty() ? "no profiled members" : join(members, ", "),
      a.epidemic ? "Regional respiratory epidemic active" : "No regional epidemic",
      device.location, device.power ? "on" : "off", humanize(to_string(device.mode)));

  std::vector<std::string> goals{fmt::format("keep the {} comfort band of {} to {}°C",
                                             to_string(a.season),
                                             format_number(a.band.low_c + a.offset),
                                             format_number(a.band.high_c + a.offset))};
  for (const auto& r : sensor_risks(s, t)) {
    if (r.key == "humidity_low") {
      goals.push_back("raise humidity");
    } else if (r.key == "humidity_high") {
      goals.push_back("lower humidity");
    } else {
      goals.push_back(fmt::format("lower {}", risk_keyword(r.key)));
    }
  }
  if (a.asthma) goals.push_back("gentle airflow for asthma");
  if (a.respiratory || a.epidemic) goals.push_back("sterilize against respiratory infection");
  if (a.very_cold) goals.push_back("no strong drafts for the very cold-sensitive");
  chain.goals = join(goals, "; ");

  chain.quantitative_targets = fmt::format(
      "CO2 < {} ppm, PM2.5 < {} µg/m³, TVOC < {} mg/m³, formaldehyde < {} mg/m³, humidity {} to "
      "{}%, setpoint {}",
      format_number(t.co2_ppm), format_number(t.pm25_ug_m3), format_number(t.tvoc_mg_m3),
      format_number(t.formaldehyde_mg_m3), format_number(t.humidity_lower_pct),
      format_number(t.humidity_upper_pct),
      p.cmd.setpoint_c ? format_number(*p.cmd.setpoint_c) + "°C" : std::string("none"));

  std::vector<std::string> on;
  std::vector<std::string> sched;
  for (Auxiliary aux : kAuxiliaries) {
    if (p.cmd.aux[aux] != AddonLevel::Off) {
      on.push_back(fmt::format("{} ({})", display_name(aux), to_string(p.cmd.aux[aux])));
    }
    if (has_interval(p.interval_time[aux])) {
      sched.push_back(fmt::format("{}: {}", display_name(aux), interval_text(p.interval_time[aux])));
    }
  }
  const std::string_view airflow = p.cmd.wind_sensation == WindSensation::Normal ? "normal wind"
                                  : p.cmd.wind_sensation == WindSensation::NoWind ? "no direct wind"
                                                                                  : "soft wind";
  chain.strategy = fmt::format("{} mode{}, fan {}, {}; {}", humanize(to_string(p.cmd.mode)),
                               p.cmd.setpoint_c ? " at " + format_number(*p.cmd.setpoint_c) + "°C" : "",
                               to_string(p.cmd.wind_speed), airflow,
                               on.empty() ? "no auxiliary functions" : join(on, ", "));
  chain.scheduling = sched.empty() ? "no auxiliary scheduling needed" : join(sched, "; ");
  return chain;
}

}  // namespace

// ---------------------------------------------------------------------------

EnvInput make_env(const OutdoorWeather& outdoor, const SensorSnapshot& indoor, const KnowledgeBase& kb) {
  return EnvInput{outdoor, indoor, season_of(parse_timestamp(outdoor.timestamp), kb.southern_hemisphere)};
}

Scenario scenario_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  Scenario s;
  if (const auto* id = r.optional("id")) s.id = ObjectReader::as_string(*id, r.field("id"));
  {
    ObjectReader env(r.required("env"), r.field("env"));
    s.outdoor = weather_from_json(env.required("outdoor"), env.field("outdoor"));
    s.indoor = sensors_from_json(env.required("indoor"), env.field("indoor"));
    env.finish();
  }
  std::vector<MemoryTagRecord> records;
  if (const auto* hh = r.optional("household")) {
    ObjectReader h(*hh, r.field("household"));
    const auto& members = h.required("members");
    if (!members.is_array()) throw SchemaError(fmt::format("{} must be a list", h.field("members")), h.field("members"));
    for (std::size_t i = 0; i < members.size(); ++i) {
      const std::string mpath = fmt::format("{}[{}]", h.field("members"), i);
      ObjectReader m(members[i], mpath);
      const auto group = m.enumeration<PopulationGroup>("group");
      MemoryTagRecord reg;
      reg.group = group;
      reg.action = TagAction::SetGroupInfo;
      records.push_back(reg);
      if (auto pref = m.optional_enumeration<ThermalPreference>("preference")) {
        MemoryTagRecord rec;
        rec.group = group;
        rec.preference = *pref;
        rec.action = TagAction::SetPreference;
        records.push_back(rec);
      }
      if (const auto* conds = m.optional("conditions")) {
        if (!conds->is_array()) throw SchemaError(fmt::format("{} must be a list", m.field("conditions")), m.field("conditions"));
        for (std::size_t k = 0; k < conds->size(); ++k) {
          MemoryTagRecord rec;
          rec.group = group;
          rec.condition = ObjectReader::as_enum<HealthCondition>(
              conds->at(k), fmt::format("{}[{}]", m.field("conditions"), k));
          rec.action = TagAction::AddCondition;
          records.push_back(rec);
        }
      }
      m.finish();
    }
    h.finish();
  }
  s.household = profile::apply(records, {}, parse_timestamp(s.outdoor.timestamp));
  if (const auto* dev = r.optional("device")) {
    s.device = device_from_json(*dev, r.field("device"));
  }
  if (const auto* flags = r.optional("kb_flags")) {
    ObjectReader f(*flags, r.field("kb_flags"));
    if (const auto* e = f.optional("epidemic_active")) {
      if (!e->is_boolean()) throw SchemaError(fmt::format("{} must be a boolean", f.field("epidemic_active")), f.field("epidemic_active"));
      s.kb_flags.epidemic_active = e->get<bool>();
    }
    f.finish();
  }
  r.finish();
  return s;
}

json to_json(const Scenario& s) {
  json members = json::array();
  for (const auto& [g, m] : s.household.members) {
    json conds = json::array();
    for (const auto& [c, at] : m.conditions) conds.push_back(to_string(c));
    members.push_back({{"group", to_string(g)}, {"preference", to_string(m.preference)}, {"conditions", conds}});
  }
  json flags = json::object();
  if (s.kb_flags.epidemic_active) flags["epidemic_active"] = *s.kb_flags.epidemic_active;
  json out{{"env", {{"outdoor", airsteward::to_json(s.outdoor)}, {"indoor", airsteward::to_json(s.indoor)}}},
           {"household", {{"members", members}}},
           {"device", airsteward::to_json(s.device)},
           {"kb_flags", flags}};
  if (!s.id.empty()) out["id"] = s.id;
  return out;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open scenario {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json(parse_json(buf.str()));
}

KnowledgeBase with_flags(KnowledgeBase kb, const KbFlags& flags) {
  if (flags.epidemic_active) kb.epidemic_override = flags.epidemic_active;
  return kb;
}

EnvInput make_env(const Scenario& s, const KnowledgeBase& kb) { return make_env(s.outdoor, s.indoor, kb); }

Assessment assess(const EnvInput& env, const profile::Household& household, const KnowledgeBase& kb) {
  Assessment a;
  a.season = env.season;
  a.band = kb.band(env.season);
  a.epidemic = epidemic_active(kb, env.outdoor.city, env.season);
  bool any_member = false;
  double offset = -std::numeric_limits<double>::infinity();
  for (const auto& [g, m] : household.members) {
    any_member = true;
    // The warmest requested offset wins: cold-sensitive members take priority.
    offset = std::max(offset, kb.offset(effective_preference(m)));
    for (const auto& [c, at] : m.conditions) {
      a.conditions.push_back(c);
      if (is_respiratory(c)) a.respiratory = true;
      if (c == HealthCondition::Asthma) a.asthma = true;
    }
    if (m.preference == ThermalPreference::VeryColdSensitive) a.very_cold = true;
    if (g == PopulationGroup::Elderly || g == PopulationGroup::Child ||
        m.preference <= ThermalPreference::SlightlyColdSensitive || m.has(HealthCondition::Asthma)) {
      a.vulnerable = true;
    }
  }
  a.offset = any_member ? offset : 0.0;
  std::sort(a.conditions.begin(), a.conditions.end());
  a.conditions.erase(std::unique(a.conditions.begin(), a.conditions.end()), a.conditions.end());
  return a;
}

std::vector<Risk> sensor_risks(const SensorSnapshot& s, const Thresholds& t) {
  std::vector<Risk> out;
  if (s.co2_ppm > t.co2_ppm) out.push_back({"co2", s.co2_ppm, t.co2_ppm});
  if (s.pm25_ug_m3 > t.pm25_ug_m3) out.push_back({"pm25", s.pm25_ug_m3, t.pm25_ug_m3});
  if (s.tvoc_mg_m3 > t.tvoc_mg_m3) out.push_back({"tvoc", s.tvoc_mg_m3, t.tvoc_mg_m3});
  if (s.hcho_mg_m3 > t.formaldehyde_mg_m3) out.push_back({"hcho", s.hcho_mg_m3, t.formaldehyde_mg_m3});
  if (s.humidity_pct < t.humidity_lower_pct) {
    out.push_back({"humidity_low", s.humidity_pct, t.humidity_lower_pct});
  }
  if (s.humidity_pct > t.humidity_upper_pct) {
    out.push_back({"humidity_high", s.humidity_pct, t.humidity_upper_pct});
  }
  return out;
}

std::vector<Risk> triggered_risks(const SensorSnapshot& s, const Thresholds& t, const Assessment& a) {
  auto out = sensor_risks(s, t);
  for (HealthCondition c : a.conditions) out.push_back({std::string(to_string(c)), 0.0, 0.0});
  if (a.epidemic) out.push_back({"epidemic", 0.0, 0.0});
  return out;
}

std::string_view risk_keyword(std::string_view key) {
  if (key == "co2") return "CO2";
  if (key == "pm25") return "PM2.5";
  if (key == "tvoc") return "TVOC";
  if (key == "hcho") return "formaldehyde";
  if (key == "humidity_low" || key == "humidity_high") return "humidity";
  return key;
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return "n/a";
  std::string s = fmt::format("{:.4f}", v);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

Thresholds derive_thresholds(const profile::Household& household, const KnowledgeBase& kb) {
  Thresholds t = kb.threshold_defaults;
  const bool respiratory = std::any_of(household.members.begin(), household.members.end(), [](const auto& kv) {
    return std::any_of(kv.second.conditions.begin(), kv.second.conditions.end(),
                       [](const auto& c) { return is_respiratory(c.first); });
  });
  if (respiratory) {
    t.pm25_ug_m3 = round_micro(t.pm25_ug_m3 * kb.sensitive_occupant_factor);
    t.tvoc_mg_m3 = round_micro(t.tvoc_mg_m3 * kb.sensitive_occupant_factor);
    t.formaldehyde_mg_m3 = round_micro(t.formaldehyde_mg_m3 * kb.sensitive_occupant_factor);
  }
  return t;
}

AuxMap<IntervalSpec> schedule_intervals(const Command& draft, const KnowledgeBase& kb) {
  AuxMap<IntervalSpec> out;
  for (Auxiliary aux : kAuxiliaries) {
    if (draft.aux[aux] == AddonLevel::Off) {
      out[aux] = std::monostate{};
    } else if (aux == Auxiliary::AirSterilization) {
      out[aux] = kb.intervals.sterilization;
    } else {
      out[aux] = kb.intervals.standard;
    }
  }
  return out;
}

std::string compose_tips(const std::vector<Risk>& risks, const KnowledgeBase& kb) {
  std::vector<std::string> sentences;
  for (const auto& r : risks) {
    auto it = kb.templates.find(r.key);
    if (it == kb.templates.end()) {
      sentences.push_back(fmt::format("Please take care with the {}.", risk_keyword(r.key)));
      continue;
    }
    sentences.push_back(fmt::format(fmt::runtime(it->second), fmt::arg("value", format_number(r.value)),
                                    fmt::arg("threshold", format_number(r.threshold))));
  }
  if (sentences.empty()) {
    auto it = kb.templates.find("nominal");
    sentences.push_back(it == kb.templates.end() ? "Air quality looks good." : it->second);
  }
  return join(sentences, " ");
}

PlanOutput plan(const EnvInput& env, const profile::Household& household, const DeviceState& device,
                const KnowledgeBase& kb) {
  const Assessment a = assess(env, household, kb);
  const SensorSnapshot& s = env.indoor;
  ControlPlan p;
  p.threshold = derive_thresholds(household, kb);
  const Thresholds& t = p.threshold;

  const double low = a.band.low_c + a.offset;
  const double high = a.band.high_c + a.offset;
  Mode mode = a.band.mode;
  if (s.temperature_c > high) {
    mode = Mode::Cool;
  } else if (s.temperature_c < low) {
    mode = Mode::Heat;
  } else if (s.humidity_pct > t.humidity_upper_pct && a.band.mode != Mode::Heat) {
    mode = Mode::Dehumidify;
  }
  p.cmd.mode = mode;
  const double setpoint = std::clamp(round_half(a.band.mid() + a.offset), low, high);
  p.cmd.setpoint_c = setpoint;

  const double gap = std::abs(s.temperature_c - setpoint);
  WindSpeed speed = gap > 4.0 ? WindSpeed::High : gap > 2.0 ? WindSpeed::Medium : WindSpeed::Auto;
  if (a.very_cold && speed == WindSpeed::High) speed = WindSpeed::Medium;
  if (a.asthma) speed = WindSpeed::Low;
  p.cmd.wind_speed = speed;

  if (a.vulnerable) {
    p.cmd.wind_sensation = mode == Mode::Cool ? WindSensation::NoWind : WindSensation::SoftWind;
  } else {
    p.cmd.wind_sensation = WindSensation::Normal;
  }

  const double purification_ratio =
      std::max({s.pm25_ug_m3 / t.pm25_ug_m3, s.hcho_mg_m3 / t.formaldehyde_mg_m3,
                s.tvoc_mg_m3 / t.tvoc_mg_m3});
  p.cmd.aux[Auxiliary::AirPurification] = level_for_ratio(purification_ratio, kb.level_bands);
  p.cmd.aux[Auxiliary::AirFresh] = level_for_ratio(s.co2_ppm / t.co2_ppm, kb.level_bands);
  if (s.humidity_pct < t.humidity_lower_pct) {
    const double ratio = s.humidity_pct > 0.0 ? t.humidity_lower_pct / s.humidity_pct
                                              : std::numeric_limits<double>::infinity();
    p.cmd.aux[Auxiliary::AirHumidification] = level_for_ratio(ratio, kb.level_bands);
  }
  if (a.respiratory) {
    p.cmd.aux[Auxiliary::AirSterilization] = AddonLevel::Medium;
  } else if (a.epidemic) {
    p.cmd.aux[Auxiliary::AirSterilization] = AddonLevel::Low;
  }

  p.interval_time = schedule_intervals(p.cmd, kb);
  const auto risks = triggered_risks(s, t, a);
  p.cmd.tips = compose_tips(risks, kb);
  return {p, build_chain(env, household, device, a, p)};
}

PlanOutput plan(const Scenario& s, const KnowledgeBase& kb) {
  const KnowledgeBase flagged = with_flags(kb, s.kb_flags);
  return plan(make_env(s, flagged), s.household, s.device, flagged);
}

}  // namespace airsteward::planner
