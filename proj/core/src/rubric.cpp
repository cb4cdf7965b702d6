#include "airsteward/rubric.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "airsteward/json_reader.hpp"

namespace airsteward::eval {

using nlohmann::json;

namespace {

constexpr std::array<RubricRule, kRuleCount> kRubric{{
    {1, "Check air params & user status", 1},
    {2, "Temp & wind speed req.", 5},
    {3, "Air quality thresholds", 1},
    {4, "Basic AC plan", 5},
    {5, "Auxiliary function plan", 5},
    {6, "Activation interval", 4},
    {7, "cmd.mode", 5},
    {8, "cmd.temperature", 5},
    {9, "cmd.wind_speed", 5},
    {10, "cmd.wind_sensation", 5},
    {11, "cmd.air_fresh", 10},
    {12, "cmd.air_purification", 10},
    {13, "cmd.air_humidification", 10},
    {14, "cmd.air_sterilization", 10},
    {15, "threshold.CO2", 1},
    {16, "threshold.PM2.5", 0},
    {17, "threshold.TVOC", 0},
    {18, "threshold.formaldehyde", 0},
    {19, "threshold.humidity_lower", 0},
    {20, "threshold.humidity_upper", 0},
    {21, "interval_time.air_fresh", 2},
    {22, "interval_time.air_purification", 2},
    {23, "interval_time.air_humidification", 2},
    {24, "interval_time.air_sterilization", 2},
    {25, "cmd.tips", 10},
}};

// Interval rules accept a duty period within this many minutes of the truth's.
constexpr int kPeriodTolerance = 60;
constexpr int kNominalPeriod = 120;

constexpr double kSeasonNormTolerance = 3.0;
constexpr double kSetpointMatchTolerance = 1.0;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool mentions(std::string_view haystack, std::string_view needle) {
  return lower(haystack).find(lower(needle)) != std::string::npos;
}

bool opposite(Mode a, Mode b) {
  return (a == Mode::Cool && b == Mode::Heat) || (a == Mode::Heat && b == Mode::Cool);
}

RuleScore make(int id, int points, std::string reason) {
  return RuleScore{points, rule(id).weight, std::move(reason)};
}

std::vector<std::string> unique_keywords(const std::vector<planner::Risk>& risks) {
  std::vector<std::string> out;
  for (const auto& r : risks) {
    std::string k(planner::risk_keyword(r.key));
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(std::move(k));
  }
  return out;
}

Auxiliary aux_for_rule(int id) {
  switch (id) {
    case 11:
    case 21:
      return Auxiliary::AirFresh;
    case 12:
    case 22:
      return Auxiliary::AirPurification;
    case 13:
    case 23:
      return Auxiliary::AirHumidification;
    default:
      return Auxiliary::AirSterilization;
  }
}

RuleScore score_perception(const CaseContext& ctx, const Candidate& c, const Truth& t) {
  if (c.chain.perception == t.chain.perception) return make(1, 1, "consistent: matches truth");
  std::vector<std::string> missing;
  for (const auto& k : unique_keywords(planner::sensor_risks(ctx.indoor, t.plan.threshold))) {
    if (!mentions(c.chain.perception, k)) missing.push_back(k);
  }
  for (HealthCondition cond : ctx.assessment.conditions) {
    if (!mentions(c.chain.perception, to_string(cond))) missing.emplace_back(to_string(cond));
  }
  if (missing.empty()) return make(1, 1, "consistent: every out-of-range reading and condition noted");
  return make(1, 0, fmt::format("inconsistent: perception omits {}", fmt::join(missing, ", ")));
}

RuleScore score_targets(const Candidate& c, const Truth& t) {
  if (c.chain.quantitative_targets == t.chain.quantitative_targets) {
    return make(3, 1, "correct threshold: matches truth");
  }
  const std::string co2 = planner::format_number(t.plan.threshold.co2_ppm);
  const std::string pm25 = planner::format_number(t.plan.threshold.pm25_ug_m3);
  if (mentions(c.chain.quantitative_targets, co2) && mentions(c.chain.quantitative_targets, pm25)) {
    return make(3, 1, fmt::format("correct threshold: CO2 {} and PM2.5 {} stated", co2, pm25));
  }
  return make(3, 0, fmt::format("wrong: targets do not state CO2 {} and PM2.5 {}", co2, pm25));
}

RuleScore score_aux_plan(const Candidate& c, const Truth& t) {
  if (c.chain.strategy == t.chain.strategy) return make(5, 5, "correct: matches truth");
  bool missing = false;
  bool wrong = false;
  for (Auxiliary aux : kAuxiliaries) {
    const AddonLevel level = t.plan.cmd.aux[aux];
    if (level == AddonLevel::Off) continue;
    const std::string exact = fmt::format("{} ({})", display_name(aux), to_string(level));
    if (mentions(c.chain.strategy, exact)) continue;
    if (mentions(c.chain.strategy, fmt::format("{} (", display_name(aux)))) {
      wrong = true;
    } else {
      missing = true;
    }
  }
  if (missing) return make(5, 0, "missing: a required auxiliary function is absent from the strategy");
  if (wrong) return make(5, 3, "wrong level: an auxiliary function is planned at another level");
  return make(5, 5, "correct: every required auxiliary function planned at its level");
}

int interval_points(const IntervalSpec& cand, const IntervalSpec& truth, std::string& reason) {
  if (cand == truth) {
    reason = "2±1h: matches truth";
    return 2;
  }
  const auto* c_duty = std::get_if<DutyCycle>(&cand);
  if (std::holds_alternative<std::monostate>(truth)) {
    if (c_duty && std::abs(c_duty->period_minutes - kNominalPeriod) <= kPeriodTolerance) {
      reason = "2±1h: optional interval within the accepted band";
      return 2;
    }
    reason = "wrong: interval given where none is needed";
    return 1;
  }
  if (std::holds_alternative<std::monostate>(cand)) {
    reason = "no interval";
    return 0;
  }
  if (const auto* t_duty = std::get_if<DutyCycle>(&truth)) {
    if (c_duty && std::abs(c_duty->period_minutes - t_duty->period_minutes) <= kPeriodTolerance) {
      reason = fmt::format("2±1h: period {} min within {} of {} min", c_duty->period_minutes,
                           kPeriodTolerance, t_duty->period_minutes);
      return 2;
    }
    reason = c_duty ? fmt::format("wrong: period {} min, expected {}±{} min", c_duty->period_minutes,
                                  t_duty->period_minutes, kPeriodTolerance)
                    : std::string("wrong: continuous operation instead of a duty cycle");
    return 1;
  }
  reason = "wrong: duty cycle instead of continuous operation";
  return 1;
}

RuleScore score_interval(int id, const ControlPlan& p, const Truth& t) {
  const Auxiliary aux = aux_for_rule(id);
  std::string reason;
  const int points = interval_points(p.interval_time[aux], t.plan.interval_time[aux], reason);
  return make(id, points, std::move(reason));
}

RuleScore score_level(int id, const ControlPlan& p, const Truth& t) {
  const Auxiliary aux = aux_for_rule(id);
  const AddonLevel c = p.cmd.aux[aux];
  const AddonLevel want = t.plan.cmd.aux[aux];
  if (c == want) return make(id, 10, fmt::format("correct: {}", to_string(c)));
  if (want != AddonLevel::Off && c == AddonLevel::Off) {
    return make(id, 0, fmt::format("missing: off, expected {}", to_string(want)));
  }
  return make(id, 5, fmt::format("wrong level: {}, expected {}", to_string(c), to_string(want)));
}

// A contradiction counts when either the candidate or the truth is in the
// offending mode, so fixing one side of it never earns points back.
RuleScore score_plan_rule(int id, const CaseContext& ctx, const ControlPlan& p, const Truth& t) {
  const Command& cmd = p.cmd;
  const Command& want = t.plan.cmd;
  const planner::Assessment& a = ctx.assessment;
  switch (id) {
    case 2: {
      const bool setpoint_ok =
          cmd.setpoint_c.has_value() == want.setpoint_c.has_value() &&
          (!cmd.setpoint_c || std::abs(*cmd.setpoint_c - *want.setpoint_c) <= kSetpointMatchTolerance);
      const bool wind_ok = cmd.wind_speed == want.wind_speed;
      if (setpoint_ok && wind_ok) return make(2, 5, "full match: temperature and wind speed");
      if (setpoint_ok || wind_ok) {
        return make(2, 3, fmt::format("partial: {} deviates", setpoint_ok ? "wind speed" : "temperature"));
      }
      return make(2, 0, "ignored: temperature and wind speed both deviate");
    }
    case 4: {
      if (cmd.setpoint_c && (cmd.mode == Mode::FanOnly || want.mode == Mode::FanOnly)) {
        return make(4, 0, "contradictory: sets temperature in fan-only mode");
      }
      if (!cmd.setpoint_c && want.setpoint_c) {
        return make(4, 0, "contradictory: no temperature where one is required");
      }
      if (opposite(cmd.mode, want.mode)) {
        return make(4, 0, fmt::format("contradictory: {} where {} is required", to_string(cmd.mode),
                                      to_string(want.mode)));
      }
      if (cmd.mode == want.mode && cmd.setpoint_c == want.setpoint_c && cmd.wind_speed == want.wind_speed) {
        return make(4, 5, "reasonable: mode, temperature and fan speed match");
      }
      return make(4, 3, "slight deviation in mode, temperature or fan speed");
    }
    case 6: {
      int full = 0;
      bool none = false;
      for (int r = 21; r <= 24; ++r) {
        const int pts = score_interval(r, p, t).points;
        if (pts == rule(r).weight) ++full;
        if (pts == 0) none = true;
      }
      if (none) return make(6, 0, "no interval for a scheduled auxiliary function");
      if (full == 4) return make(6, 4, "2±1h, correct");
      return make(6, 2, "interval wrong");
    }
    case 7:
      if (cmd.mode == want.mode) return make(7, 5, fmt::format("match: {}", to_string(cmd.mode)));
      if (opposite(cmd.mode, want.mode)) {
        return make(7, 0, fmt::format("contradicted: {} where {} is required", to_string(cmd.mode),
                                      to_string(want.mode)));
      }
      return make(7, 3, fmt::format("suboptimal: {}, expected {}", to_string(cmd.mode), to_string(want.mode)));
    case 8: {
      if (cmd.setpoint_c && (cmd.mode == Mode::FanOnly || want.mode == Mode::FanOnly)) {
        return make(8, 0, "illogical: temperature in fan-only mode");
      }
      if (cmd.setpoint_c == want.setpoint_c) return make(8, 5, "within season norm: matches truth");
      if (!cmd.setpoint_c) return make(8, 0, "illogical: no temperature where one is required");
      const double lo = a.band.low_c - kSeasonNormTolerance;
      const double hi = a.band.high_c + kSeasonNormTolerance;
      if (*cmd.setpoint_c >= lo && *cmd.setpoint_c <= hi) {
        return make(8, 5, fmt::format("±3°C of season norm: {} within [{}, {}]",
                                      planner::format_number(*cmd.setpoint_c), planner::format_number(lo),
                                      planner::format_number(hi)));
      }
      return make(8, 3, fmt::format("outside: {} not within [{}, {}]", planner::format_number(*cmd.setpoint_c),
                                    planner::format_number(lo), planner::format_number(hi)));
    }
    case 9:
      if (cmd.wind_speed == want.wind_speed) return make(9, 5, "reasonable: matches truth");
      if (a.very_cold && cmd.wind_speed == WindSpeed::High) return make(9, 0, "cold-sensitive + high fan");
      return make(9, 3, fmt::format("acceptable: {}, expected {}", to_string(cmd.wind_speed),
                                    to_string(want.wind_speed)));
    case 10:
      if (cmd.wind_sensation == want.wind_sensation) return make(10, 5, "valid: matches truth");
      if (cmd.wind_sensation == WindSensation::NoWind && (cmd.mode != Mode::Cool || want.mode != Mode::Cool)) {
        return make(10, 0, "no-wind in non-cooling mode");
      }
      return make(10, 3, fmt::format("acceptable: {}, expected {}", to_string(cmd.wind_sensation),
                                     to_string(want.wind_sensation)));
    case 11:
    case 12:
    case 13:
      return score_level(id, p, t);
    case 14: {
      const AddonLevel got = cmd.aux[Auxiliary::AirSterilization];
      const AddonLevel expected = want.aux[Auxiliary::AirSterilization];
      if (got == expected) return make(14, 10, "on when needed / off when not: matches truth");
      const bool needed = a.respiratory || a.epidemic || expected != AddonLevel::Off;
      const bool on = got != AddonLevel::Off;
      if (needed) return on ? make(14, 10, "on when needed") : make(14, 0, "should be on but was off");
      return on ? make(14, 8, "unnecessary on: no illness or epidemic") : make(14, 10, "off when not needed");
    }
    case 15:
      if (p.threshold == t.plan.threshold) return make(15, 1, "correct: all six thresholds match");
      return make(15, 0, "wrong: thresholds differ from truth");
    case 16:
    case 17:
    case 18:
    case 19:
    case 20:
      return make(id, 0, "scored jointly under rule 15");
    case 21:
    case 22:
    case 23:
    case 24:
      return score_interval(id, p, t);
    case 25: {
      if (cmd.tips == want.tips) return make(25, 10, "relevant + caring: matches truth");
      if (cmd.tips.find_first_not_of(" \t\r\n") == std::string::npos) return make(25, 0, "missing tips");
      const auto required =
          unique_keywords(planner::triggered_risks(ctx.indoor, t.plan.threshold, a));
      if (required.empty()) return make(25, 10, "relevant: nothing specific to warn about");
      std::vector<std::string> missing;
      for (const auto& k : required) {
        if (!mentions(cmd.tips, k)) missing.push_back(k);
      }
      if (missing.empty()) return make(25, 10, "relevant + caring: every risk addressed");
      if (missing.size() < required.size()) {
        return make(25, 5, fmt::format("weak care: tips omit {}", fmt::join(missing, ", ")));
      }
      return make(25, 0, fmt::format("wrong: tips address none of {}", fmt::join(required, ", ")));
    }
    default:
      break;
  }
  throw std::out_of_range(fmt::format("rubric has no rule {}", id));
}

}  // namespace

const std::array<RubricRule, kRuleCount>& rubric() { return kRubric; }

const RubricRule& rule(int id) {
  if (id < 1 || id > kRuleCount) throw std::out_of_range(fmt::format("rubric has no rule {}", id));
  return kRubric[static_cast<std::size_t>(id - 1)];
}

int total_weight() {
  int sum = 0;
  for (const auto& r : kRubric) sum += r.weight;
  return sum;
}

CaseContext make_context(const planner::Scenario& scenario, const planner::KnowledgeBase& kb) {
  const auto flagged = planner::with_flags(kb, scenario.kb_flags);
  const auto env = planner::make_env(scenario, flagged);
  return CaseContext{planner::assess(env, scenario.household, flagged), scenario.indoor};
}

RuleScore score_rule(int id, const CaseContext& ctx, const Candidate& candidate, const Truth& truth) {
  rule(id);
  switch (id) {
    case 1:
      return score_perception(ctx, candidate, truth);
    case 3:
      return score_targets(candidate, truth);
    case 5:
      return score_aux_plan(candidate, truth);
    default:
      break;
  }
  if (!candidate.plan) {
    return make(id, 0, candidate.diagnostic.empty() ? "no valid candidate plan"
                                                    : "no valid candidate plan: " + candidate.diagnostic);
  }
  return score_plan_rule(id, ctx, *candidate.plan, truth);
}

bool passes(const RuleScoreReport& report, const PassPolicy& policy) {
  if (report.total < policy.min_total) return false;
  if (policy.forbid_zero_major) {
    for (const auto& [id, s] : report.per_rule) {
      if (s.weight >= policy.major_weight && s.points == 0) return false;
    }
  }
  return true;
}

RuleScoreReport score_case(const CaseContext& ctx, const Candidate& candidate, const Truth& truth,
                           const PassPolicy& policy) {
  RuleScoreReport report;
  report.policy = policy;
  if (!candidate.plan) {
    report.diagnostics.push_back(candidate.diagnostic.empty() ? "candidate plan missing" : candidate.diagnostic);
  }
  for (const auto& r : kRubric) {
    auto s = score_rule(r.id, ctx, candidate, truth);
    report.total += s.points;
    report.per_rule.emplace(r.id, std::move(s));
  }
  report.passed = passes(report, policy);
  return report;
}

json to_json(const PassPolicy& policy) {
  return {{"min_total", policy.min_total},
          {"forbid_zero_major", policy.forbid_zero_major},
          {"major_weight", policy.major_weight}};
}

PassPolicy pass_policy_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  PassPolicy p;
  if (r.contains("min_total")) p.min_total = r.integer("min_total");
  if (r.contains("forbid_zero_major")) p.forbid_zero_major = r.boolean("forbid_zero_major");
  if (r.contains("major_weight")) p.major_weight = r.integer("major_weight");
  r.finish();
  if (p.min_total < 0 || p.min_total > 100) {
    throw SchemaError(fmt::format("{} must be within [0, 100]", r.field("min_total")), r.field("min_total"));
  }
  return p;
}

json to_json(const RuleScoreReport& report) {
  json rules = json::array();
  for (const auto& [id, s] : report.per_rule) {
    rules.push_back({{"id", id},
                     {"dimension", rule(id).dimension},
                     {"weight", s.weight},
                     {"points", s.points},
                     {"reason", s.reason}});
  }
  return {{"total", report.total},
          {"passed", report.passed},
          {"policy", to_json(report.policy)},
          {"rules", rules},
          {"diagnostics", report.diagnostics}};
}

}  // namespace airsteward::eval
