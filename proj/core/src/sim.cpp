#include "airsteward/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "airsteward/codec.hpp"
#include "airsteward/json_reader.hpp"

namespace airsteward::sim {

using nlohmann::json;

namespace {

std::size_t idx(AddonLevel l) { return static_cast<std::size_t>(l); }

double relax(double rate, double target, double x) { return rate * (target - x); }

std::array<double, 4> level_rates(ObjectReader& r, std::string_view key, std::array<double, 4> fallback) {
  const auto* v = r.optional(key);
  if (!v) return fallback;
  ObjectReader lv(*v, r.field(key));
  std::array<double, 4> out{0.0, 0.0, 0.0, 0.0};
  for (AddonLevel l : {AddonLevel::Low, AddonLevel::Medium, AddonLevel::High}) {
    out[idx(l)] = lv.number(to_string(l));
  }
  lv.finish();
  return out;
}

json level_rates_json(const std::array<double, 4>& rates) {
  return {{"low", rates[1]}, {"medium", rates[2]}, {"high", rates[3]}};
}

double* quantity(SensorSnapshot& s, std::string_view name) {
  if (name == "temperature_c" || name == "temperature") return &s.temperature_c;
  if (name == "humidity_pct" || name == "humidity") return &s.humidity_pct;
  if (name == "co2_ppm" || name == "co2") return &s.co2_ppm;
  if (name == "tvoc_mg_m3" || name == "tvoc") return &s.tvoc_mg_m3;
  if (name == "pm25_ug_m3" || name == "pm25") return &s.pm25_ug_m3;
  if (name == "hcho_mg_m3" || name == "hcho" || name == "formaldehyde") return &s.hcho_mg_m3;
  return nullptr;
}

}  // namespace

void SimParams::validate() const {
  const double leaks[] = {leakage.temperature_c, leakage.humidity_pct, leakage.co2_ppm,
                          leakage.tvoc_mg_m3,    leakage.pm25_ug_m3,   leakage.hcho_mg_m3};
  for (double l : leaks) {
    if (!(l > 0.0)) throw std::invalid_argument("leakage rates must be positive");
  }
  auto non_negative = [](double v, std::string_view what) {
    if (!(v >= 0.0)) throw std::invalid_argument(fmt::format("{} must be non-negative", what));
  };
  for (double v : hvac_rates) non_negative(v, "hvac rate");
  for (double v : purification_rates) non_negative(v, "purification rate");
  for (double v : fresh_air_rates) non_negative(v, "fresh-air rate");
  for (double v : humidification_rates) non_negative(v, "humidification rate");
  non_negative(dehumidify_rate, "dehumidify rate");
  non_negative(occupancy_co2_source, "occupancy CO2 source");
  non_negative(hcho_emission, "formaldehyde emission");
  non_negative(outdoor_co2_ppm, "outdoor CO2");
  non_negative(outdoor_tvoc_mg_m3, "outdoor TVOC");
  non_negative(outdoor_hcho_mg_m3, "outdoor formaldehyde");
  if (!(dt_minutes > 0.0)) throw std::invalid_argument("dt_minutes must be positive");
}

SimParams sim_params_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  SimParams p;
  if (const auto* leak = r.optional("leakage")) p.leakage = sensors_from_json(*leak, r.field("leakage"));
  if (const auto* bg = r.optional("outdoor_background")) {
    ObjectReader b(*bg, r.field("outdoor_background"));
    if (b.contains("co2_ppm")) p.outdoor_co2_ppm = b.non_negative("co2_ppm");
    if (b.contains("tvoc_mg_m3")) p.outdoor_tvoc_mg_m3 = b.non_negative("tvoc_mg_m3");
    if (b.contains("hcho_mg_m3")) p.outdoor_hcho_mg_m3 = b.non_negative("hcho_mg_m3");
    b.finish();
  }
  if (const auto* hv = r.optional("hvac_rates")) {
    ObjectReader h(*hv, r.field("hvac_rates"));
    for (WindSpeed w : all_values<WindSpeed>()) {
      p.hvac_rates[static_cast<std::size_t>(w)] = h.non_negative(to_string(w));
    }
    h.finish();
  }
  p.purification_rates = level_rates(r, "purification_rates", p.purification_rates);
  p.fresh_air_rates = level_rates(r, "fresh_air_rates", p.fresh_air_rates);
  p.humidification_rates = level_rates(r, "humidification_rates", p.humidification_rates);
  if (r.contains("dehumidify_rate")) p.dehumidify_rate = r.number("dehumidify_rate");
  if (r.contains("occupancy_co2_source")) p.occupancy_co2_source = r.number("occupancy_co2_source");
  if (r.contains("hcho_emission")) p.hcho_emission = r.number("hcho_emission");
  if (r.contains("dt_minutes")) p.dt_minutes = r.number("dt_minutes");
  r.finish();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(fmt::format("{}: {}", path.empty() ? "sim" : path, e.what()), path);
  }
  return p;
}

json to_json(const SimParams& p) {
  json hvac = json::object();
  for (WindSpeed w : all_values<WindSpeed>()) hvac[std::string(to_string(w))] = p.hvac_rates[static_cast<std::size_t>(w)];
  return {{"leakage", airsteward::to_json(p.leakage)},
          {"outdoor_background",
           {{"co2_ppm", p.outdoor_co2_ppm}, {"tvoc_mg_m3", p.outdoor_tvoc_mg_m3}, {"hcho_mg_m3", p.outdoor_hcho_mg_m3}}},
          {"hvac_rates", hvac},
          {"purification_rates", level_rates_json(p.purification_rates)},
          {"fresh_air_rates", level_rates_json(p.fresh_air_rates)},
          {"humidification_rates", level_rates_json(p.humidification_rates)},
          {"dehumidify_rate", p.dehumidify_rate},
          {"occupancy_co2_source", p.occupancy_co2_source},
          {"hcho_emission", p.hcho_emission},
          {"dt_minutes", p.dt_minutes}};
}

std::vector<Auxiliary> Switches::active() const {
  std::vector<Auxiliary> out;
  for (Auxiliary aux : kAuxiliaries) {
    if (level[aux] != AddonLevel::Off) out.push_back(aux);
  }
  return out;
}

SimState apply_plan(SimState state, const ControlPlan& plan) {
  state.device.power = true;
  state.device.mode = plan.cmd.mode;
  state.device.setpoint_c = plan.cmd.setpoint_c;
  state.device.wind_speed = plan.cmd.wind_speed;
  state.device.wind_sensation = plan.cmd.wind_sensation;
  for (Auxiliary aux : kAuxiliaries) {
    auto& phase = state.schedules[aux];
    if (phase.spec != plan.interval_time[aux]) {
      phase.spec = plan.interval_time[aux];
      phase.anchor = state.clock;
    }
  }
  return state;
}

Switches tick_scheduler(const SimState& state, const ControlPlan& plan) {
  Switches sw;
  for (Auxiliary aux : kAuxiliaries) {
    const AddonLevel planned = plan.cmd.aux[aux];
    const auto& phase = state.schedules[aux];
    bool on = false;
    if (planned != AddonLevel::Off) {
      if (std::holds_alternative<Continuous>(phase.spec)) {
        on = true;
      } else if (const auto* d = std::get_if<DutyCycle>(&phase.spec)) {
        const double into = std::fmod(state.clock - phase.anchor, static_cast<double>(d->period_minutes));
        on = into < static_cast<double>(d->run_minutes);
      }
    }
    if (on) sw.level[aux] = planned;
  }

  const auto& s = state.indoor;
  const auto& t = plan.threshold;
  AuxMap<bool> breach{};
  breach[Auxiliary::AirFresh] = s.co2_ppm > t.co2_ppm;
  breach[Auxiliary::AirPurification] = s.pm25_ug_m3 > t.pm25_ug_m3 ||
                                       s.hcho_mg_m3 > t.formaldehyde_mg_m3 ||
                                       s.tvoc_mg_m3 > t.tvoc_mg_m3;
  breach[Auxiliary::AirHumidification] = s.humidity_pct < t.humidity_lower_pct;
  for (Auxiliary aux : kAuxiliaries) {
    if (breach[aux] && sw.level[aux] == AddonLevel::Off) {
      sw.level[aux] = plan.cmd.aux[aux] == AddonLevel::Off ? AddonLevel::Low : plan.cmd.aux[aux];
      sw.forced[aux] = true;
    }
  }
  return sw;
}

SensorSnapshot clamp(SensorSnapshot s) {
  s.humidity_pct = std::clamp(s.humidity_pct, 0.0, 100.0);
  s.co2_ppm = std::max(0.0, s.co2_ppm);
  s.tvoc_mg_m3 = std::max(0.0, s.tvoc_mg_m3);
  s.pm25_ug_m3 = std::max(0.0, s.pm25_ug_m3);
  s.hcho_mg_m3 = std::max(0.0, s.hcho_mg_m3);
  return s;
}

SimState step(const SimState& state, const ControlPlan& plan, const OutdoorWeather& outdoor,
              const SimParams& params, double dt) {
  const Switches sw = tick_scheduler(state, plan);
  const SensorSnapshot& x = state.indoor;
  const SensorSnapshot& leak = params.leakage;
  const DeviceState& dev = state.device;

  double d_temp = relax(leak.temperature_c, outdoor.temperature_c, x.temperature_c);
  double d_hum = relax(leak.humidity_pct, std::clamp(outdoor.humidity_pct, 0.0, 100.0), x.humidity_pct);
  double d_co2 = relax(leak.co2_ppm, params.outdoor_co2_ppm, x.co2_ppm) + params.occupancy_co2_source;
  double d_tvoc = relax(leak.tvoc_mg_m3, params.outdoor_tvoc_mg_m3, x.tvoc_mg_m3);
  double d_pm25 = relax(leak.pm25_ug_m3, outdoor.pm25_ug_m3, x.pm25_ug_m3);
  double d_hcho = relax(leak.hcho_mg_m3, params.outdoor_hcho_mg_m3, x.hcho_mg_m3) + params.hcho_emission;

  if (dev.power && dev.setpoint_c) {
    const double rate = params.hvac_rates[static_cast<std::size_t>(dev.wind_speed)];
    const double sp = *dev.setpoint_c;
    const bool pull = (dev.mode == Mode::Cool && x.temperature_c > sp) ||
                      (dev.mode == Mode::Heat && x.temperature_c < sp) || dev.mode == Mode::Auto;
    if (pull) d_temp += relax(rate, sp, x.temperature_c);
  }
  const double band_mid = (plan.threshold.humidity_lower_pct + plan.threshold.humidity_upper_pct) / 2.0;
  if (dev.power && dev.mode == Mode::Dehumidify && x.humidity_pct > band_mid) {
    d_hum += relax(params.dehumidify_rate, band_mid, x.humidity_pct);
  }
  if (const auto l = sw.level[Auxiliary::AirHumidification]; l != AddonLevel::Off && x.humidity_pct < band_mid) {
    d_hum += relax(params.humidification_rates[idx(l)], band_mid, x.humidity_pct);
  }
  if (const auto l = sw.level[Auxiliary::AirFresh]; l != AddonLevel::Off) {
    d_co2 += relax(params.fresh_air_rates[idx(l)], params.outdoor_co2_ppm, x.co2_ppm);
  }
  if (const auto l = sw.level[Auxiliary::AirPurification]; l != AddonLevel::Off) {
    const double rate = params.purification_rates[idx(l)];
    d_pm25 -= rate * x.pm25_ug_m3;
    d_tvoc -= rate * x.tvoc_mg_m3;
    d_hcho -= rate * x.hcho_mg_m3;
  }

  SimState next = state;
  next.indoor.temperature_c = x.temperature_c + dt * d_temp;
  next.indoor.humidity_pct = x.humidity_pct + dt * d_hum;
  next.indoor.co2_ppm = x.co2_ppm + dt * d_co2;
  next.indoor.tvoc_mg_m3 = x.tvoc_mg_m3 + dt * d_tvoc;
  next.indoor.pm25_ug_m3 = x.pm25_ug_m3 + dt * d_pm25;
  next.indoor.hcho_mg_m3 = x.hcho_mg_m3 + dt * d_hcho;
  next.indoor = clamp(next.indoor);
  next.device.addon_levels = sw.level;
  next.clock = state.clock + dt;
  return next;
}

SimState perturb(SimState state, const std::map<std::string, double>& deltas) {
  for (const auto& [name, delta] : deltas) {
    if (!quantity(state.indoor, name)) throw std::invalid_argument(fmt::format("unknown quantity '{}'", name));
    if (!std::isfinite(delta)) throw std::invalid_argument(fmt::format("delta for '{}' is not finite", name));
  }
  for (const auto& [name, delta] : deltas) *quantity(state.indoor, name) += delta;
  state.indoor = clamp(state.indoor);
  return state;
}

SimState initial_state(const planner::Scenario& scenario) {
  SimState s;
  s.indoor = clamp(scenario.indoor);
  s.device = scenario.device;
  return s;
}

Trajectory run_episode(const planner::Scenario& scenario, const planner::KnowledgeBase& kb,
                       const SimParams& params, double horizon_minutes, double replan_every) {
  if (!(horizon_minutes > 0.0)) throw std::invalid_argument("horizon must be positive");
  params.validate();
  const auto flagged = planner::with_flags(kb, scenario.kb_flags);
  const double dt = params.dt_minutes;

  Trajectory traj;
  traj.initial = initial_state(scenario);
  SimState state = traj.initial;
  double next_plan = 0.0;
  // Step count is fixed up front so the clock never accumulates rounding drift
  // into an extra step.
  const auto steps = static_cast<std::size_t>(std::ceil(horizon_minutes / dt - 1e-9));
  for (std::size_t i = 0; i < steps; ++i) {
    if (traj.plans.empty() || (replan_every > 0.0 && state.clock + 1e-9 >= next_plan)) {
      const auto env = planner::make_env(scenario.outdoor, state.indoor, flagged);
      auto out = planner::plan(env, scenario.household, state.device, flagged);
      state = apply_plan(state, out.plan);
      traj.plans.push_back(PlanEvent{state.clock, std::move(out)});
      next_plan = state.clock + replan_every;
    }
    state = step(state, traj.plans.back().output.plan, scenario.outdoor, params, dt);
    traj.steps.push_back(TrajectoryStep{state.clock, state.indoor, state.device.addon_levels, traj.plans.size() - 1});
  }
  return traj;
}

json to_json(const SimState& s) {
  json schedules = json::object();
  for (Auxiliary aux : kAuxiliaries) {
    schedules[std::string(to_string(aux))] = {{"interval", airsteward::to_json(s.schedules[aux].spec)},
                                              {"anchor", s.schedules[aux].anchor}};
  }
  return {{"clock", s.clock},
          {"indoor", airsteward::to_json(s.indoor)},
          {"device", airsteward::to_json(s.device)},
          {"schedules", schedules}};
}

std::string trajectory_jsonl(const Trajectory& t) {
  std::string out;
  std::size_t next_plan = 0;
  auto emit_plans_until = [&](std::size_t index) {
    while (next_plan < t.plans.size() && next_plan <= index) {
      const auto& p = t.plans[next_plan];
      out += canonical_dump({{"type", "plan"},
                             {"index", next_plan},
                             {"clock", p.clock},
                             {"plan", airsteward::to_json(p.output.plan)},
                             {"chain", airsteward::to_json(p.output.chain)}});
      out += '\n';
      ++next_plan;
    }
  };
  for (const auto& s : t.steps) {
    emit_plans_until(s.plan_index);
    json running = json::object();
    for (Auxiliary aux : kAuxiliaries) running[std::string(to_string(aux))] = to_string(s.running[aux]);
    out += canonical_dump({{"type", "step"},
                           {"clock", s.clock},
                           {"indoor", airsteward::to_json(s.indoor)},
                           {"running", running},
                           {"plan_index", s.plan_index}});
    out += '\n';
  }
  return out;
}

}  // namespace airsteward::sim
