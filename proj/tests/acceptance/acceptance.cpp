// Release acceptance run. One line per criterion; exit status is the number
// of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "airsteward/codec.hpp"
#include "airsteward/corpus.hpp"
#include "airsteward/extractor.hpp"
#include "airsteward/profile.hpp"
#include "airsteward/rubric.hpp"
#include "airsteward/sim.hpp"
#include "airsteward/stream_parser.hpp"
#include "generators.hpp"

using namespace airsteward;
using airsteward::testkit::Rng;
using nlohmann::json;

namespace {

/// Collects the first few failures of a criterion.
struct Failures {
  std::vector<std::string> items;
  std::size_t count = 0;
  void add(std::string what) {
    ++count;
    if (items.size() < 5) items.push_back(std::move(what));
  }
  void check(bool ok, const std::function<std::string()>& what) {
    if (!ok) add(what());
  }
};

const planner::KnowledgeBase& kb() { return planner::default_knowledge_base(); }

planner::Scenario scenario_file(const std::string& name) {
  return planner::load_scenario(testkit::source_path("scenarios/" + name));
}

void add_member(planner::Scenario& s, PopulationGroup g, std::optional<HealthCondition> c,
                ThermalPreference p = ThermalPreference::Neutral) {
  std::vector<MemoryTagRecord> records(1);
  records[0].group = g;
  records[0].action = TagAction::SetPreference;
  records[0].preference = p;
  if (c) {
    MemoryTagRecord r;
    r.group = g;
    r.action = TagAction::AddCondition;
    r.condition = c;
    records.push_back(r);
  }
  s.household = profile::apply(records, s.household, parse_timestamp(s.outdoor.timestamp));
}

// Rubric -------------------------------------------------------------------

void rubric_integrity(Failures& f) {
  int sum = 0;
  for (const auto& r : eval::rubric()) sum += r.weight;
  f.check(sum == 100 && eval::total_weight() == 100, [&] { return fmt::format("weights sum to {}", sum); });

  Rng rng(101);
  for (int i = 0; i < 1000; ++i) {
    const auto s = testkit::random_scenario(rng, i);
    const auto ctx = eval::make_context(s, kb());
    const eval::Truth t{testkit::random_plan(rng), testkit::random_chain(rng)};
    const auto report = eval::score_case(ctx, {t.plan, t.chain, {}}, t);
    f.check(report.total == 100, [&] { return fmt::format("identity case {} scored {}", i, report.total); });
  }

  auto deduct = [&](const planner::Scenario& s, const std::function<void(ControlPlan&)>& corrupt, int rule,
                    int rule_points, int total, const std::string& label) {
    const auto out = planner::plan(s, kb());
    const auto ctx = eval::make_context(s, kb());
    const eval::Truth t{out.plan, out.chain};
    ControlPlan p = out.plan;
    corrupt(p);
    const auto report = eval::score_case(ctx, {p, out.chain, {}}, t);
    const int got = report.per_rule.at(rule).points;
    f.check(got == rule_points && report.total == total, [&] {
      return fmt::format("{}: rule {} = {} (want {}), total {} (want {})", label, rule, got, rule_points,
                         report.total, total);
    });
  };

  auto busy = scenario_file("nominal.json");
  busy.indoor.co2_ppm = 1300;
  busy.indoor.pm25_ug_m3 = 60;
  busy.indoor.humidity_pct = 20;
  const std::array<std::pair<int, Auxiliary>, 3> aux_rules{
      {{11, Auxiliary::AirFresh}, {12, Auxiliary::AirPurification}, {13, Auxiliary::AirHumidification}}};
  for (const auto& [rule, aux] : aux_rules) {
    deduct(busy, [aux = aux](ControlPlan& p) { p.cmd.aux[aux] = AddonLevel::Off; }, rule, 0, 90,
           fmt::format("{} off", to_string(aux)));
    deduct(busy,
           [aux = aux](ControlPlan& p) {
             p.cmd.aux[aux] = p.cmd.aux[aux] == AddonLevel::High ? AddonLevel::Low : AddonLevel::High;
           },
           rule, 5, 95, fmt::format("{} wrong level", to_string(aux)));
  }

  auto coughing = scenario_file("nominal.json");
  add_member(coughing, PopulationGroup::Child, HealthCondition::Cough);
  deduct(coughing, [](ControlPlan& p) { p.cmd.aux[Auxiliary::AirSterilization] = AddonLevel::Off; }, 14, 0, 90,
         "sterilization should be on");
  deduct(scenario_file("nominal.json"),
         [](ControlPlan& p) {
           p.cmd.aux[Auxiliary::AirSterilization] = AddonLevel::Low;
           p.interval_time[Auxiliary::AirSterilization] = DutyCycle{30, 120};
         },
         14, 8, 98, "unnecessary sterilization");

  auto risky = scenario_file("nominal.json");
  risky.indoor.hcho_mg_m3 = 0.2;
  add_member(risky, PopulationGroup::Child, HealthCondition::Fever);
  deduct(risky, [](ControlPlan& p) { p.cmd.tips = ""; }, 25, 0, 90, "empty tips");
  deduct(risky, [](ControlPlan& p) { p.cmd.tips = "Ventilate: formaldehyde is high."; }, 25, 5, 95, "partial tips");
}

// Planner ------------------------------------------------------------------

bool any_condition(const profile::Household& h, bool (*pred)(HealthCondition)) {
  for (const auto& [g, m] : h.members)
    for (const auto& [c, at] : m.conditions)
      if (pred(c)) return true;
  return false;
}

std::vector<std::string> hard_rule_violations(const planner::Scenario& s, const planner::PlanOutput& out) {
  std::vector<std::string> v;
  const auto flagged = planner::with_flags(kb(), s.kb_flags);
  const auto season = planner::season_of(parse_timestamp(s.outdoor.timestamp), flagged.southern_hemisphere);
  const bool epidemic = planner::epidemic_active(flagged, s.outdoor.city, season);
  const auto& p = out.plan;
  const auto& h = s.household;

  if (!validate_plan(p).ok()) v.push_back("plan does not validate");
  if ((any_condition(h, [](HealthCondition c) { return is_respiratory(c); }) || epidemic) &&
      p.cmd.aux[Auxiliary::AirSterilization] == AddonLevel::Off) {
    v.push_back("(a) sterilization off");
  }
  bool very_cold = false;
  for (const auto& [g, m] : h.members) very_cold |= m.preference == ThermalPreference::VeryColdSensitive;
  if (very_cold && p.cmd.wind_speed == WindSpeed::High) v.push_back("(b) high fan with very cold-sensitive member");
  if (!p.cmd.setpoint_c) {
    v.push_back("(c) no setpoint");
  } else {
    const auto& band = flagged.band(season);
    std::vector<double> offsets;
    for (const auto& [g, m] : h.members) {
      offsets.push_back(flagged.offset(m.preference));
      if (m.preference != ThermalPreference::VeryColdSensitive) {
        offsets.push_back(flagged.offset(static_cast<ThermalPreference>(static_cast<int>(m.preference) - 1)));
      }
    }
    if (offsets.empty()) offsets.push_back(0.0);
    bool in_band = false;
    for (double o : offsets) in_band |= *p.cmd.setpoint_c >= band.low_c + o && *p.cmd.setpoint_c <= band.high_c + o;
    if (!in_band) v.push_back(fmt::format("(c) setpoint {} outside band", *p.cmd.setpoint_c));
  }
  if ((s.indoor.pm25_ug_m3 > p.threshold.pm25_ug_m3 || s.indoor.hcho_mg_m3 > p.threshold.formaldehyde_mg_m3) &&
      p.cmd.aux[Auxiliary::AirPurification] == AddonLevel::Off) {
    v.push_back("(d) purification off");
  }
  if (any_condition(h, [](HealthCondition c) { return c == HealthCondition::Asthma; }) &&
      p.cmd.wind_speed != WindSpeed::Low) {
    v.push_back("(e) asthma without low fan");
  }
  for (Auxiliary aux : kAuxiliaries) {
    if (p.cmd.aux[aux] != AddonLevel::Off && !has_interval(p.interval_time[aux])) {
      v.push_back(fmt::format("(f) {} has no interval", to_string(aux)));
    }
  }
  const auto& c = out.chain;
  if (c.perception.empty() || c.goals.empty() || c.quantitative_targets.empty() || c.strategy.empty() ||
      c.scheduling.empty()) {
    v.push_back("(f) empty reasoning segment");
  }
  return v;
}

void planner_hard_rules(Failures& f) {
  Rng rng(202);
  const eval::PlannerSource source(kb());
  for (int i = 0; i < 10000; ++i) {
    const auto s = testkit::random_scenario(rng, i);
    const auto out = planner::plan(s, kb());
    for (const auto& v : hard_rule_violations(s, out)) f.add(fmt::format("{}: {}", s.id, v));
    const auto c = eval::make_case(s.id, s, kb());
    const auto report = eval::score_case(eval::make_context(s, kb()), source.produce(c), c.truth);
    f.check(report.total == 100, [&] { return fmt::format("{}: self-score {}", s.id, report.total); });
  }
}

// Constants ----------------------------------------------------------------

void paper_constants(Failures& f) {
  const auto t = planner::derive_thresholds({}, kb());
  f.check(t.co2_ppm == 800.0, [&] { return fmt::format("co2 threshold {}", t.co2_ppm); });
  f.check(t.pm25_ug_m3 == 15.0, [&] { return fmt::format("pm25 threshold {}", t.pm25_ug_m3); });

  Command draft;
  draft.aux[Auxiliary::AirSterilization] = AddonLevel::Low;
  const auto iv = planner::schedule_intervals(draft, kb());
  f.check(iv[Auxiliary::AirSterilization] == IntervalSpec{DutyCycle{30, 240}},
          [] { return std::string("sterilization interval is not {30, 240}"); });

  auto s = scenario_file("nominal.json");
  s.kb_flags.epidemic_active = true;
  s.indoor.co2_ppm = 1300;
  s.indoor.pm25_ug_m3 = 60;
  s.indoor.humidity_pct = 20;
  const auto out = planner::plan(s, kb());
  const auto ctx = eval::make_context(s, kb());
  const eval::Truth truth{out.plan, out.chain};
  const std::array<std::pair<int, Auxiliary>, 4> interval_rules{{{21, Auxiliary::AirFresh},
                                                                  {22, Auxiliary::AirPurification},
                                                                  {23, Auxiliary::AirHumidification},
                                                                  {24, Auxiliary::AirSterilization}}};
  for (const auto& [rule, aux] : interval_rules) {
    const auto* dc = std::get_if<DutyCycle>(&truth.plan.interval_time[aux]);
    if (!dc) {
      f.add(fmt::format("{} truth has no duty cycle", to_string(aux)));
      continue;
    }
    for (int period = dc->period_minutes - 90; period <= dc->period_minutes + 90; ++period) {
      if (period <= dc->run_minutes) continue;
      ControlPlan p = truth.plan;
      p.interval_time[aux] = DutyCycle{dc->run_minutes, period};
      const int points = eval::score_rule(rule, ctx, {p, truth.chain, {}}, truth).points;
      const bool inside = std::abs(period - dc->period_minutes) <= 60;
      const int want = inside ? eval::rule(rule).weight : 1;
      f.check(points == want, [&, aux = aux, rule = rule] {
        return fmt::format("rule {} {} period {} scored {} (want {})", rule, to_string(aux), period, points, want);
      });
    }
  }
}

// Stream -------------------------------------------------------------------

std::vector<stream::StreamEvent> feed_chunks(std::string_view text, const std::vector<std::size_t>& cuts,
                                             const stream::SegmentationConfig& cfg) {
  stream::StreamParser p(cfg);
  std::vector<stream::StreamEvent> out;
  std::size_t prev = 0;
  auto take = [&](std::vector<stream::StreamEvent> ev) { out.insert(out.end(), ev.begin(), ev.end()); };
  for (std::size_t cut : cuts) {
    take(p.feed(text.substr(prev, cut - prev)));
    prev = cut;
  }
  take(p.feed(text.substr(prev)));
  take(p.finish());
  return stream::coalesce(out);
}

std::string damaged_stream(Rng& rng, const stream::SegmentationConfig& cfg) {
  std::string s = stream::render(testkit::random_chain(rng), testkit::random_plan(rng), cfg);
  const auto at = [&] { return static_cast<std::size_t>(testkit::uniform_int(rng, 0, static_cast<int>(s.size()))); };
  switch (testkit::uniform_int(rng, 0, 5)) {
    case 0:
      s.resize(at());
      break;
    case 1:
      s.insert(at(), testkit::random_text(rng, 3));
      break;
    case 2: {
      const std::vector<std::string> bits{cfg.reasoning_close, cfg.command_open, "<", "</", "{]", "\xe6\xb8"};
      s.insert(at(), testkit::pick_from(rng, bits));
      break;
    }
    default:
      break;
  }
  return s;
}

void chunking_invariance(Failures& f) {
  Rng rng(303);
  const std::vector<stream::SegmentationConfig> configs{{}, {"<R>", "</R>", "<C>", "</C>", true},
                                                        {"<REASONING>", "</REASONING>", "<COMMAND>", "</COMMAND>", false}};
  for (int i = 0; i < 100; ++i) {
    const auto& cfg = configs[static_cast<std::size_t>(i) % configs.size()];
    const std::string text = stream::render(testkit::random_chain(rng), testkit::random_plan(rng), cfg);
    const auto oracle = stream::coalesce(stream::parse_whole(text, cfg));
    for (std::size_t cut = 0; cut <= text.size(); ++cut) {
      f.check(feed_chunks(text, {cut}, cfg) == oracle,
              [&] { return fmt::format("stream {} split at {} differs", i, cut); });
    }
  }
  for (int i = 0; i < 1000; ++i) {
    const auto& cfg = configs[static_cast<std::size_t>(i) % configs.size()];
    const std::string text = damaged_stream(rng, cfg);
    std::vector<std::size_t> cuts;
    for (int k = testkit::uniform_int(rng, 1, 40); k > 0 && text.size() > 1; --k) {
      cuts.push_back(static_cast<std::size_t>(testkit::uniform_int(rng, 1, static_cast<int>(text.size()) - 1)));
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    f.check(feed_chunks(text, cuts, cfg) == stream::coalesce(stream::parse_whole(text, cfg)),
            [&] { return fmt::format("partition {} ({} cuts) differs", i, cuts.size()); });
  }
}

// Extraction ---------------------------------------------------------------

std::vector<MemoryTagRecord> without_ids(std::vector<MemoryTagRecord> v) {
  for (auto& r : v) r.source_utterance_id.clear();
  return v;
}

void extraction_goldens(Failures& f) {
  std::istringstream in(testkit::read_file(testkit::source_path("tests/data/extraction_golden.jsonl")));
  std::string line;
  int cases = 0;
  bool grandma = false;
  std::set<std::string> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = parse_json(line);
    extract::SessionContext ctx;
    if (j.contains("speaker")) ctx.speaker_default_group = enum_from_string<PopulationGroup>(j["speaker"].get<std::string>());
    if (j.contains("history"))
      for (const auto& h : j["history"]) extract::extract(h.get<std::string>(), ctx);
    std::vector<MemoryTagRecord> expected;
    for (const auto& e : j["expected"]) {
      expected.push_back(record_from_json(e));
      for (const auto& [k, v] : e.items()) values.insert(v.get<std::string>());
    }
    const auto got = without_ids(extract::extract(j["utterance"].get<std::string>(), ctx));
    f.check(got == expected, [&] { return fmt::format("golden {} differs", j["id"].get<std::string>()); });
    grandma |= j["utterance"] == "Grandma's asthma has cleared up";
    ++cases;
  }
  f.check(cases == 50, [&] { return fmt::format("{} golden cases", cases); });
  f.check(grandma, [] { return std::string("grandma case missing"); });
  auto require_all = [&]<typename E>(E) {
    for (E e : all_values<E>()) {
      f.check(values.count(std::string(to_string(e))) == 1,
              [&] { return fmt::format("tag value {} not covered", to_string(e)); });
    }
  };
  require_all(PopulationGroup{});
  require_all(HealthCondition{});
  require_all(ThermalPreference{});
  f.check(values.count("add_condition") && values.count("remove_condition") && values.count("set_preference"),
          [] { return std::string("actions not covered"); });

  Rng rng(505);
  int adds = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto u = testkit::random_utterance(rng);
    std::optional<PopulationGroup> speaker;
    if (testkit::coin(rng)) speaker = testkit::pick<PopulationGroup>(rng);
    auto run = [&](const std::string& text) {
      extract::SessionContext ctx;
      ctx.speaker_default_group = speaker;
      return without_ids(extract::extract(text, ctx));
    };
    const auto before = run(u);
    const auto after = run(u + ", but it's all good now");
    for (const auto& r : before) {
      if (r.action != TagAction::AddCondition) continue;
      ++adds;
      MemoryTagRecord removal = r;
      removal.action = TagAction::RemoveCondition;
      f.check(std::find(after.begin(), after.end(), removal) != after.end(), [&] {
        return fmt::format("no removal of {} for {} after \"{}\"", to_string(*r.condition), to_string(r.group), u);
      });
    }
  }
  f.check(adds >= 500, [&] { return fmt::format("only {} additions generated", adds); });
}

// Profile ------------------------------------------------------------------

void profile_replay(Failures& f) {
  Rng rng(606);
  const auto dir = std::filesystem::temp_directory_path() / "airsteward-acceptance";
  std::filesystem::create_directories(dir);
  Timestamp t0 = parse_timestamp("2025-03-01T08:00:00Z");
  for (int trial = 0; trial < 1000; ++trial) {
    profile::Household h;
    Timestamp now = t0;
    for (int batch = testkit::uniform_int(rng, 0, 12); batch > 0; --batch) {
      now += std::chrono::seconds(testkit::uniform_int(rng, 0, 86400 * 3));
      if (testkit::coin(rng, 0.2)) {
        h = profile::expire_stale(h, now, std::chrono::seconds(testkit::uniform_int(rng, 3600, 86400 * 5)));
        continue;
      }
      std::vector<MemoryTagRecord> records;
      for (int k = testkit::uniform_int(rng, 0, 5); k > 0; --k) records.push_back(testkit::random_record(rng));
      h = profile::apply(records, h, now);
    }
    const auto replayed = profile::replay(h.change_log);
    f.check(replayed.members == h.members, [&] { return fmt::format("trial {}: replay differs", trial); });

    const auto path = dir / "household.jsonl";
    profile::persist(h, path);
    const auto loaded = profile::load(path);
    f.check(loaded == h, [&] { return fmt::format("trial {}: persist/load differs", trial); });

    const auto g = testkit::pick<PopulationGroup>(rng);
    const auto c = testkit::pick<HealthCondition>(rng);
    if (profile::snapshot(h, g).has(c)) continue;
    MemoryTagRecord add;
    add.group = g;
    add.action = TagAction::AddCondition;
    add.condition = c;
    MemoryTagRecord remove = add;
    remove.action = TagAction::RemoveCondition;
    const auto restored = profile::apply({remove}, profile::apply({add}, h, now), now);
    const auto before = profile::snapshot(h, g);
    const auto after = profile::snapshot(restored, g);
    f.check(before.conditions == after.conditions && before.preference == after.preference,
            [&] { return fmt::format("trial {}: add then remove changed {}", trial, to_string(g)); });
  }
  std::filesystem::remove_all(dir);
}

// Simulator ----------------------------------------------------------------

constexpr std::array<double SensorSnapshot::*, 6> kFields{
    &SensorSnapshot::temperature_c, &SensorSnapshot::humidity_pct, &SensorSnapshot::co2_ppm,
    &SensorSnapshot::tvoc_mg_m3,    &SensorSnapshot::pm25_ug_m3,   &SensorSnapshot::hcho_mg_m3};

ControlPlan quiet_plan() {
  ControlPlan p;
  p.cmd.mode = Mode::FanOnly;
  p.cmd.tips = "x";
  p.threshold.co2_ppm = 1e9;
  p.threshold.pm25_ug_m3 = 1e9;
  p.threshold.tvoc_mg_m3 = 1e9;
  p.threshold.formaldehyde_mg_m3 = 1e9;
  p.threshold.humidity_lower_pct = 0;
  p.threshold.humidity_upper_pct = 100;
  return p;
}

sim::SimParams random_params(Rng& rng) {
  sim::SimParams p;
  for (auto fld : kFields) p.leakage.*fld = testkit::uniform(rng, 0.001, 0.2);
  p.outdoor_co2_ppm = testkit::uniform(rng, 300, 600);
  p.outdoor_tvoc_mg_m3 = testkit::uniform(rng, 0, 0.2);
  p.outdoor_hcho_mg_m3 = testkit::uniform(rng, 0, 0.05);
  for (auto& r : p.hvac_rates) r = testkit::uniform(rng, 0, 0.3);
  for (auto* table : {&p.purification_rates, &p.fresh_air_rates, &p.humidification_rates}) {
    (*table)[0] = 0;
    for (std::size_t i = 1; i < 4; ++i) (*table)[i] = testkit::uniform(rng, 0, 0.3);
  }
  p.dehumidify_rate = testkit::uniform(rng, 0, 0.3);
  p.occupancy_co2_source = testkit::uniform(rng, 0, 10);
  p.hcho_emission = testkit::uniform(rng, 0, 0.002);
  p.dt_minutes = testkit::uniform(rng, 0.25, 2.0);
  return p;
}

ControlPlan plan_from_oracle(const json& p) {
  ControlPlan plan;
  plan.cmd.mode = *enum_from_string<Mode>(p["mode"].get<std::string>());
  if (!p["setpoint_c"].is_null()) plan.cmd.setpoint_c = p["setpoint_c"].get<double>();
  plan.cmd.wind_speed = *enum_from_string<WindSpeed>(p["wind_speed"].get<std::string>());
  for (Auxiliary aux : kAuxiliaries) {
    const std::string name(to_string(aux));
    plan.cmd.aux[aux] = *enum_from_string<AddonLevel>(p["aux"][name].get<std::string>());
    const auto& iv = p["intervals"][name];
    if (iv.is_array()) plan.interval_time[aux] = DutyCycle{iv[0].get<int>(), iv[1].get<int>()};
  }
  plan.threshold = thresholds_from_json(p["thresholds"]);
  plan.cmd.tips = "x";
  return plan;
}

void simulator(Failures& f) {
  Rng rng(707);
  for (int episode = 0; episode < 1000; ++episode) {
    auto params = random_params(rng);
    const bool sources_off = episode % 2 == 1;
    if (sources_off) {
      params.occupancy_co2_source = 0;
      params.hcho_emission = 0;
    }
    const auto plan = sources_off ? quiet_plan() : testkit::random_plan(rng);
    sim::SimState state;
    state.indoor = testkit::random_indoor(rng);
    state = sim::apply_plan(state, plan);
    if (sources_off) state.device.power = false;
    const auto out = testkit::random_outdoor(rng);
    const SensorSnapshot target{out.temperature_c, out.humidity_pct, params.outdoor_co2_ppm,
                                params.outdoor_tvoc_mg_m3, out.pm25_ug_m3, params.outdoor_hcho_mg_m3};
    std::array<double, 6> gap{};
    for (std::size_t k = 0; k < 6; ++k) gap[k] = std::abs(state.indoor.*kFields[k] - target.*kFields[k]);
    const int steps = sources_off ? 200000 : 300;
    bool ok = true;
    bool settled = false;
    for (int i = 0; i < steps && ok && !settled; ++i) {
      state = sim::step(state, plan, out, params, params.dt_minutes);
      const auto& x = state.indoor;
      if (x.co2_ppm < 0 || x.tvoc_mg_m3 < 0 || x.pm25_ug_m3 < 0 || x.hcho_mg_m3 < 0 || x.humidity_pct < 0 ||
          x.humidity_pct > 100) {
        f.add(fmt::format("episode {} step {}: negative or out-of-range quantity", episode, i));
        ok = false;
      }
      if (!sources_off) continue;
      settled = true;
      for (std::size_t k = 0; k < 6 && ok; ++k) {
        const double now = std::abs(state.indoor.*kFields[k] - target.*kFields[k]);
        if (gap[k] > 1e-6 && !(now < gap[k])) {
          f.add(fmt::format("episode {} step {}: quantity {} moved away from outdoor", episode, i, k));
          ok = false;
        }
        gap[k] = now;
        settled &= now <= 1e-6;
      }
    }
    if (ok && sources_off) {
      f.check(settled, [&] { return fmt::format("episode {}: did not settle on the outdoor values", episode); });
    }
  }

  // {30, 240}: on for minutes [0,30), [240,270), [480,510).
  auto plan = quiet_plan();
  plan.cmd.aux[Auxiliary::AirSterilization] = AddonLevel::Low;
  plan.interval_time[Auxiliary::AirSterilization] = DutyCycle{30, 240};
  sim::SimState state = sim::apply_plan(sim::SimState{}, plan);
  OutdoorWeather out;
  out.temperature_c = 20;
  out.humidity_pct = 50;
  for (int minute = 0; minute < 3 * 240; ++minute) {
    const bool want = minute % 240 < 30;
    const auto sw = sim::tick_scheduler(state, plan);
    const bool on = sw.level[Auxiliary::AirSterilization] != AddonLevel::Off;
    f.check(on == want && !sw.forced[Auxiliary::AirSterilization],
            [&] { return fmt::format("sterilization at minute {} is {}", minute, on ? "on" : "off"); });
    state = sim::step(state, plan, out, sim::SimParams{}, 1.0);
  }

  const auto data = json::parse(testkit::read_file(testkit::source_path("tests/data/euler_trace.json")));
  const auto params = sim::sim_params_from_json(data["params"]);
  for (const auto& c : data["cases"]) {
    const auto cplan = plan_from_oracle(c["plan"]);
    OutdoorWeather w;
    w.city = "Testville";
    w.timestamp = "2025-07-01T12:00:00Z";
    w.temperature_c = c["outdoor"]["temperature_c"];
    w.humidity_pct = c["outdoor"]["humidity_pct"];
    w.pm25_ug_m3 = c["outdoor"]["pm25_ug_m3"];
    sim::SimState s;
    s.indoor = sensors_from_json(c["indoor"]);
    s = sim::apply_plan(s, cplan);
    f.check(c["trace"].size() == 500, [&] { return fmt::format("trace has {} rows", c["trace"].size()); });
    double worst = 0.0;
    for (const auto& row : c["trace"]) {
      s = sim::step(s, cplan, w, params, params.dt_minutes);
      const auto expected = sensors_from_json(row["indoor"]);
      for (auto fld : kFields) worst = std::max(worst, std::abs(s.indoor.*fld - expected.*fld));
    }
    f.check(worst <= 1e-9, [&] {
      return fmt::format("{}: max Euler deviation {:.3e}", c["name"].get<std::string>(), worst);
    });
  }
}

// End to end ---------------------------------------------------------------

void end_to_end(Failures& f) {
#ifndef AIRSTEWARD_CLI
  f.add("command-line tool was not built");
#else
  const auto out = std::filesystem::temp_directory_path() / "airsteward-acceptance-hcho.jsonl";
  std::filesystem::remove(out);
  const std::string cmd = fmt::format("\"{}\" sim --scenario \"{}\" --out \"{}\" > /dev/null 2>&1", AIRSTEWARD_CLI,
                                      testkit::source_path("scenarios/high_formaldehyde.json").string(), out.string());
  const int rc = std::system(cmd.c_str());
  if (rc != 0) {
    f.add(fmt::format("`{}` exited with {}", cmd, rc));
    return;
  }
  const auto expected = json::parse(testkit::read_file(testkit::source_path("tests/data/hcho_crossing.json")));
  std::istringstream in(testkit::read_file(out));
  std::string line;
  std::optional<double> threshold;
  std::optional<long> crossing;
  long step = 0;
  while (std::getline(in, line)) {
    const auto j = parse_json(line);
    if (j["type"] == "plan") {
      if (!threshold) threshold = j["plan"]["threshold"]["formaldehyde_mg_m3"].get<double>();
      continue;
    }
    ++step;
    if (!crossing && threshold && j["indoor"]["hcho_mg_m3"].get<double>() < *threshold) crossing = step;
  }
  std::filesystem::remove(out);
  if (!crossing) {
    f.add(fmt::format("hcho never fell below the threshold in {} steps", step));
    return;
  }
  const long want = expected["step"].get<long>();
  f.check(std::labs(*crossing - want) <= 2, [&] { return fmt::format("crossing at step {} (want {} ± 2)", *crossing, want); });
#endif
}

struct Criterion {
  std::string name;
  std::function<void(Failures&)> run;
  std::optional<double> budget_s;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"rubric integrity", rubric_integrity, 10.0},
      {"planner hard rules", planner_hard_rules, 60.0},
      {"published constants", paper_constants, std::nullopt},
      {"chunking invariance", chunking_invariance, 30.0},
      {"extraction goldens", extraction_goldens, std::nullopt},
      {"profile replay", profile_replay, 10.0},
      {"simulator", simulator, std::nullopt},
      {"end to end", end_to_end, std::nullopt},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Failures f;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(f);
    } catch (const std::exception& e) {
      f.add(fmt::format("exception: {}", e.what()));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s && secs > *c.budget_s) f.add(fmt::format("took {:.1f}s, budget {:.0f}s", secs, *c.budget_s));
    const bool ok = f.count == 0;
    failed += ok ? 0 : 1;
    fmt::print("{} {} ({:.2f}s)\n", ok ? "PASS" : "FAIL", c.name, secs);
    for (const auto& item : f.items) fmt::print("    {}\n", item);
    if (f.count > f.items.size()) fmt::print("    ... {} more\n", f.count - f.items.size());
    std::fflush(stdout);
  }
  return failed;
}
