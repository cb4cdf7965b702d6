#include "airsteward/knowledge.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "airsteward/codec.hpp"
#include "airsteward/json_reader.hpp"
#include "embedded_data.hpp"

namespace airsteward::planner {

using nlohmann::json;

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

bool applies(const Epidemic& e, std::string_view region, Season season) {
  const bool region_ok = e.region == "*" || iequals(e.region, region);
  return region_ok && std::find(e.seasons.begin(), e.seasons.end(), season) != e.seasons.end();
}

template <typename E>
std::vector<E> enum_list(const json& v, const std::string& field) {
  if (!v.is_array()) throw SchemaError(fmt::format("{} must be a list", field), field);
  std::vector<E> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(ObjectReader::as_enum<E>(v[i], fmt::format("{}[{}]", field, i)));
  }
  return out;
}

DutyCycle duty_from_json(const json& j, const std::string& field) {
  const IntervalSpec spec = interval_from_json(j, field);
  if (const auto* d = std::get_if<DutyCycle>(&spec)) return *d;
  throw SchemaError(fmt::format("{} must be a run/period pair", field), field);
}

std::string render_template(const std::string& tmpl) {
  return fmt::format(fmt::runtime(tmpl), fmt::arg("value", "1"), fmt::arg("threshold", "1"));
}

}  // namespace

Season season_of_month(unsigned month, bool southern_hemisphere) {
  if (southern_hemisphere) month = (month + 5) % 12 + 1;
  switch (month) {
    case 3:
    case 4:
    case 5:
      return Season::Spring;
    case 6:
    case 7:
    case 8:
      return Season::Summer;
    case 9:
    case 10:
    case 11:
      return Season::Autumn;
    default:
      return Season::Winter;
  }
}

Season season_of(Timestamp ts, bool southern_hemisphere) {
  return season_of_month(month_of(ts), southern_hemisphere);
}

bool epidemic_active(const KnowledgeBase& kb, std::string_view region, Season season) {
  if (kb.epidemic_override) return *kb.epidemic_override;
  return std::any_of(kb.epidemics.begin(), kb.epidemics.end(),
                     [&](const Epidemic& e) { return applies(e, region, season); });
}

std::vector<HealthCondition> prevalent_illnesses(const KnowledgeBase& kb, std::string_view region,
                                                 Season season) {
  std::vector<HealthCondition> out;
  for (const auto& e : kb.epidemics) {
    if (!applies(e, region, season)) continue;
    for (HealthCondition c : e.illnesses) {
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

AddonLevel level_for_ratio(double ratio, const std::array<double, 3>& bands) {
  if (ratio <= bands[0]) return AddonLevel::Off;
  if (ratio <= bands[1]) return AddonLevel::Low;
  if (ratio <= bands[2]) return AddonLevel::Medium;
  return AddonLevel::High;
}

KnowledgeBase knowledge_base_from_json(const json& j) {
  ObjectReader r(j, "");
  KnowledgeBase kb;

  if (const auto* h = r.optional("hemisphere")) {
    const std::string v = ObjectReader::as_string(*h, "hemisphere");
    if (v != "north" && v != "south") {
      throw SchemaError("hemisphere must be 'north' or 'south'", "hemisphere");
    }
    kb.southern_hemisphere = v == "south";
  }

  if (const auto* eps = r.optional("epidemics")) {
    if (!eps->is_array()) throw SchemaError("epidemics must be a list", "epidemics");
    for (std::size_t i = 0; i < eps->size(); ++i) {
      const std::string path = fmt::format("epidemics[{}]", i);
      ObjectReader e(eps->at(i), path);
      Epidemic ep;
      ep.region = e.string("region");
      ep.seasons = enum_list<Season>(e.required("seasons"), e.field("seasons"));
      if (const auto* ill = e.optional("illnesses")) {
        ep.illnesses = enum_list<HealthCondition>(*ill, e.field("illnesses"));
      }
      e.finish();
      kb.epidemics.push_back(std::move(ep));
    }
  }
  if (const auto* active = r.optional("epidemic_active")) {
    if (!active->is_boolean()) throw SchemaError("epidemic_active must be a boolean", "epidemic_active");
    kb.epidemic_override = active->get<bool>();
  }

  kb.threshold_defaults = thresholds_from_json(r.required("thresholds"), "thresholds");

  if (const auto* f = r.optional("sensitive_occupant_factor")) {
    kb.sensitive_occupant_factor = ObjectReader::as_number(*f, "sensitive_occupant_factor");
    if (!(kb.sensitive_occupant_factor > 0.0 && kb.sensitive_occupant_factor <= 1.0)) {
      throw SchemaError("sensitive_occupant_factor must be within (0, 1]", "sensitive_occupant_factor");
    }
  }

  if (const auto* bands = r.optional("level_bands")) {
    if (!bands->is_array() || bands->size() != 3) {
      throw SchemaError("level_bands must hold three ratios", "level_bands");
    }
    for (std::size_t i = 0; i < 3; ++i) {
      kb.level_bands[i] = ObjectReader::as_number(bands->at(i), fmt::format("level_bands[{}]", i));
    }
    if (!(kb.level_bands[0] > 0.0 && kb.level_bands[0] < kb.level_bands[1] &&
          kb.level_bands[1] < kb.level_bands[2])) {
      throw SchemaError("level_bands must be positive and increasing", "level_bands");
    }
  }

  if (const auto* iv = r.optional("intervals")) {
    ObjectReader i(*iv, "intervals");
    if (const auto* d = i.optional("default")) kb.intervals.standard = duty_from_json(*d, i.field("default"));
    if (const auto* s = i.optional("sterilization")) {
      kb.intervals.sterilization = duty_from_json(*s, i.field("sterilization"));
    }
    if (i.contains("continuous_cap_minutes")) {
      kb.intervals.continuous_cap_minutes = i.integer("continuous_cap_minutes");
      if (kb.intervals.continuous_cap_minutes <= 0) {
        throw SchemaError("intervals.continuous_cap_minutes must be positive",
                          "intervals.continuous_cap_minutes");
      }
    }
    i.finish();
  }

  {
    ObjectReader bands(r.required("comfort_bands"), "comfort_bands");
    for (Season s : all_values<Season>()) {
      const std::string key(to_string(s));
      ObjectReader b(bands.required(key), bands.field(key));
      ComfortBand band;
      band.mode = b.enumeration<Mode>("mode");
      band.low_c = b.number("low_c");
      band.high_c = b.number("high_c");
      b.finish();
      if (!(band.low_c <= band.high_c)) {
        throw SchemaError(fmt::format("{} is empty", bands.field(key)), bands.field(key));
      }
      if (band.mode == Mode::FanOnly) {
        throw SchemaError(fmt::format("{}.mode must carry a setpoint", bands.field(key)),
                          bands.field(key));
      }
      kb.comfort_bands[static_cast<std::size_t>(s)] = band;
    }
    bands.finish();
  }

  {
    ObjectReader offsets(r.required("preference_offsets"), "preference_offsets");
    for (ThermalPreference p : all_values<ThermalPreference>()) {
      kb.preference_offsets[static_cast<std::size_t>(p)] = offsets.number(to_string(p));
    }
    offsets.finish();
  }

  if (const auto* t = r.optional("templates")) {
    if (!t->is_object()) throw SchemaError("templates must be an object", "templates");
    for (const auto& [key, value] : t->items()) {
      const std::string field = fmt::format("templates.{}", key);
      kb.templates[key] = ObjectReader::as_string(value, field);
      try {
        render_template(kb.templates[key]);
      } catch (const fmt::format_error& e) {
        throw SchemaError(fmt::format("{}: {}", field, e.what()), field);
      }
    }
  }
  r.finish();
  return kb;
}

json to_json(const KnowledgeBase& kb) {
  json epidemics = json::array();
  for (const auto& e : kb.epidemics) {
    json seasons = json::array();
    for (Season s : e.seasons) seasons.push_back(to_string(s));
    json ill = json::array();
    for (HealthCondition c : e.illnesses) ill.push_back(to_string(c));
    epidemics.push_back({{"region", e.region}, {"seasons", seasons}, {"illnesses", ill}});
  }
  json bands = json::object();
  for (Season s : all_values<Season>()) {
    const auto& b = kb.band(s);
    bands[std::string(to_string(s))] = {{"mode", to_string(b.mode)}, {"low_c", b.low_c}, {"high_c", b.high_c}};
  }
  json offsets = json::object();
  for (ThermalPreference p : all_values<ThermalPreference>()) {
    offsets[std::string(to_string(p))] = kb.offset(p);
  }
  json out{{"hemisphere", kb.southern_hemisphere ? "south" : "north"},
           {"epidemics", epidemics},
           {"thresholds", airsteward::to_json(kb.threshold_defaults)},
           {"sensitive_occupant_factor", kb.sensitive_occupant_factor},
           {"level_bands", kb.level_bands},
           {"intervals",
            {{"default", airsteward::to_json(IntervalSpec{kb.intervals.standard})},
             {"sterilization", airsteward::to_json(IntervalSpec{kb.intervals.sterilization})},
             {"continuous_cap_minutes", kb.intervals.continuous_cap_minutes}}},
           {"comfort_bands", bands},
           {"preference_offsets", offsets},
           {"templates", kb.templates}};
  if (kb.epidemic_override) out["epidemic_active"] = *kb.epidemic_override;
  return out;
}

KnowledgeBase load_knowledge_base(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open knowledge base {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return knowledge_base_from_json(parse_json(buf.str()));
}

const KnowledgeBase& default_knowledge_base() {
  static const KnowledgeBase kb = knowledge_base_from_json(parse_json(embedded::k_knowledge_base));
  return kb;
}

}  // namespace airsteward::planner
