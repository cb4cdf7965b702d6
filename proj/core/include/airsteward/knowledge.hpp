#pragma once

// Expert knowledge consulted by the planner: seasonal comfort bands, threshold
// defaults, epidemic calendar, level bands, interval defaults and tip templates.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airsteward/schema.hpp"
#include "airsteward/time.hpp"

namespace airsteward::planner {

struct Epidemic {
  std::string region;  // city name, or "*" for everywhere
  std::vector<Season> seasons;
  std::vector<HealthCondition> illnesses;

  bool operator==(const Epidemic&) const = default;
};

struct ComfortBand {
  Mode mode = Mode::Auto;
  double low_c = 22.0;
  double high_c = 26.0;

  double mid() const { return (low_c + high_c) / 2.0; }
  bool operator==(const ComfortBand&) const = default;
};

struct IntervalDefaults {
  DutyCycle standard{30, 120};
  DutyCycle sterilization{30, 240};
  int continuous_cap_minutes = 600;

  bool operator==(const IntervalDefaults&) const = default;
};

struct KnowledgeBase {
  bool southern_hemisphere = false;
  std::vector<Epidemic> epidemics;
  /// Set from scenario flags; wins over the epidemic calendar when present.
  std::optional<bool> epidemic_override;
  Thresholds threshold_defaults;
  double sensitive_occupant_factor = 0.8;
  /// Exceedance ratio upper bounds for Off, Low and Medium; above is High.
  std::array<double, 3> level_bands{1.0, 1.5, 2.5};
  IntervalDefaults intervals;
  std::array<ComfortBand, 4> comfort_bands;  // indexed by Season
  std::array<double, 5> preference_offsets;  // indexed by ThermalPreference
  /// Tip sentences keyed by risk ("hcho", "fever", "epidemic", "nominal", ...).
  /// "{value}" and "{threshold}" are substituted.
  std::map<std::string, std::string> templates;

  const ComfortBand& band(Season s) const { return comfort_bands[static_cast<std::size_t>(s)]; }
  double offset(ThermalPreference p) const { return preference_offsets[static_cast<std::size_t>(p)]; }
  bool operator==(const KnowledgeBase&) const = default;
};

/// Meteorological season of a month (1..12).
Season season_of_month(unsigned month, bool southern_hemisphere);
Season season_of(Timestamp ts, bool southern_hemisphere);

/// True when the override says so, else when the calendar lists an epidemic
/// for the region (case-insensitive) or "*" in this season.
bool epidemic_active(const KnowledgeBase& kb, std::string_view region, Season season);
std::vector<HealthCondition> prevalent_illnesses(const KnowledgeBase& kb, std::string_view region,
                                                 Season season);

/// Throws SchemaError on invalid content, including thresholds that violate the
/// plan invariants and malformed templates.
KnowledgeBase knowledge_base_from_json(const nlohmann::json& j);
nlohmann::json to_json(const KnowledgeBase& kb);
KnowledgeBase load_knowledge_base(const std::filesystem::path& path);
/// The shipped knowledge base (data/knowledge_base.json).
const KnowledgeBase& default_knowledge_base();

/// Level for an exceedance ratio under the configured bands.
AddonLevel level_for_ratio(double ratio, const std::array<double, 3>& bands);

}  // namespace airsteward::planner
