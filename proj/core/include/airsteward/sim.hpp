#pragma once

// First-order indoor environment model stepped with explicit Euler, plus the
// scheduler that runs a plan's auxiliary duty cycles with threshold override.

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airsteward/knowledge.hpp"
#include "airsteward/planner.hpp"
#include "airsteward/schema.hpp"

namespace airsteward::sim {

/// Per-quantity rates in 1/min unless noted.
struct SimParams {
  SensorSnapshot leakage{0.01, 0.01, 0.005, 0.005, 0.01, 0.005};
  // Outdoor values the weather report does not carry.
  double outdoor_co2_ppm = 420.0;
  double outdoor_tvoc_mg_m3 = 0.05;
  double outdoor_hcho_mg_m3 = 0.01;
  std::array<double, 4> hvac_rates{0.03, 0.05, 0.08, 0.05};        // by WindSpeed
  std::array<double, 4> purification_rates{0.0, 0.03, 0.06, 0.10}; // by AddonLevel
  std::array<double, 4> fresh_air_rates{0.0, 0.02, 0.04, 0.07};
  std::array<double, 4> humidification_rates{0.0, 0.02, 0.04, 0.06};
  double dehumidify_rate = 0.03;
  double occupancy_co2_source = 2.0;  // ppm/min
  double hcho_emission = 0.0005;      // mg/m³/min
  double dt_minutes = 1.0;

  /// Throws std::invalid_argument for negative rates or non-positive leakage.
  void validate() const;
  bool operator==(const SimParams&) const = default;
};

SimParams sim_params_from_json(const nlohmann::json& j, const std::string& path = "");
nlohmann::json to_json(const SimParams& p);

/// Where an auxiliary's duty cycle is anchored. The anchor only moves when the
/// auxiliary's interval changes.
struct AuxPhase {
  IntervalSpec spec;
  double anchor = 0.0;
  bool operator==(const AuxPhase&) const = default;
};

struct SimState {
  SensorSnapshot indoor;
  DeviceState device;
  double clock = 0.0;  // minutes since episode start
  AuxMap<AuxPhase> schedules;
  bool operator==(const SimState&) const = default;
};

/// Auxiliary levels for one tick. `forced` marks threshold overrides.
struct Switches {
  AuxMap<AddonLevel> level{};
  AuxMap<bool> forced{};
  std::vector<Auxiliary> active() const;
  bool operator==(const Switches&) const = default;
};

/// Device takes the plan's command; schedules whose interval changed restart
/// at the current clock.
SimState apply_plan(SimState state, const ControlPlan& plan);

/// Which auxiliaries run during [clock, clock + dt). A duty cycle is on while
/// (clock - anchor) mod period < run; a breached threshold forces its
/// auxiliary on at the plan level, or Low if the plan has it off.
Switches tick_scheduler(const SimState& state, const ControlPlan& plan);

/// One Euler step. Device levels in the returned state show what ran.
SimState step(const SimState& state, const ControlPlan& plan, const OutdoorWeather& outdoor,
              const SimParams& params, double dt);

/// Adds deltas to named quantities, then clamps. Names are the sensor field
/// names or their short forms (co2, pm25, tvoc, hcho, formaldehyde,
/// temperature, humidity). Throws std::invalid_argument for unknown names
/// before changing anything.
SimState perturb(SimState state, const std::map<std::string, double>& deltas);

SensorSnapshot clamp(SensorSnapshot s);

struct TrajectoryStep {
  double clock = 0.0;
  SensorSnapshot indoor;
  AuxMap<AddonLevel> running{};
  std::size_t plan_index = 0;
  bool operator==(const TrajectoryStep&) const = default;
};

struct PlanEvent {
  double clock = 0.0;
  planner::PlanOutput output;
  bool operator==(const PlanEvent&) const = default;
};

struct Trajectory {
  SimState initial;
  std::vector<PlanEvent> plans;
  std::vector<TrajectoryStep> steps;
  bool operator==(const Trajectory&) const = default;
};

SimState initial_state(const planner::Scenario& scenario);

/// Plans at t = 0 and every replan_every minutes (0 = never again), stepping
/// dt until the horizon. Throws std::invalid_argument for a non-positive
/// horizon.
Trajectory run_episode(const planner::Scenario& scenario, const planner::KnowledgeBase& kb,
                       const SimParams& params, double horizon_minutes, double replan_every);

/// JSON lines: plan events as {"type": "plan", ...}, steps as {"type": "step", ...}.
std::string trajectory_jsonl(const Trajectory& t);
nlohmann::json to_json(const SimState& s);

}  // namespace airsteward::sim
