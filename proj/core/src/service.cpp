#include "airsteward/service.hpp"

#include <chrono>
#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "airsteward/codec.hpp"
#include "airsteward/corpus.hpp"
#include "airsteward/json_reader.hpp"
#include "airsteward/stream_parser.hpp"
#include "embedded_data.hpp"

namespace airsteward::service {

using nlohmann::json;

namespace {

Timestamp at_clock(const Session& s) {
  return s.started + std::chrono::seconds(static_cast<long long>(std::llround(s.sim.clock * 60.0)));
}

json switches_json(const AuxMap<AddonLevel>& levels) {
  json out = json::object();
  for (Auxiliary aux : kAuxiliaries) out[std::string(to_string(aux))] = to_string(levels[aux]);
  return out;
}

/// Bytes at the end of `s` that start a UTF-8 sequence not yet complete.
std::size_t incomplete_utf8_tail(const std::string& s) {
  const std::size_t n = s.size();
  for (std::size_t back = 1; back <= 3 && back <= n; ++back) {
    const auto c = static_cast<unsigned char>(s[n - back]);
    if ((c & 0xC0) == 0x80) continue;
    std::size_t need = 1;
    if ((c & 0xE0) == 0xC0) need = 2;
    else if ((c & 0xF0) == 0xE0) need = 3;
    else if ((c & 0xF8) == 0xF0) need = 4;
    return need > back ? back : 0;
  }
  return 0;
}

}  // namespace

std::vector<std::string> utf8_chunks(std::string_view text, std::size_t size) {
  if (size == 0) size = 1;
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = std::min(text.size(), pos + size);
    // Back off continuation bytes so a multi-byte sequence stays whole.
    while (end < text.size() && end > pos && (static_cast<unsigned char>(text[end]) & 0xC0) == 0x80) --end;
    if (end == pos) {
      end = pos + 1;
      while (end < text.size() && (static_cast<unsigned char>(text[end]) & 0xC0) == 0x80) ++end;
    }
    out.emplace_back(text.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

Service::Service(ServiceOptions options)
    : options_(std::move(options)),
      kb_(options_.config.knowledge_base()),
      lexicon_(options_.config.lexicon()) {
  if (options_.store_dir) std::filesystem::create_directories(*options_.store_dir);
}

std::shared_ptr<Session> Service::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError(fmt::format("no session '{}'", id));
  return it->second;
}

std::vector<std::string> Service::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

json Service::create_session(const json& body) {
  auto s = std::make_shared<Session>();
  const json& b = body.is_null() ? json::object() : body;
  ObjectReader r(b, "");
  if (const auto* sc = r.optional("scenario")) {
    s->scenario = planner::scenario_from_json(*sc, "scenario");
  } else {
    s->scenario = planner::scenario_from_json(parse_json(embedded::k_demo));
  }
  if (const auto* sp = r.optional("speaker")) {
    s->ctx.speaker_default_group = ObjectReader::as_enum<PopulationGroup>(*sp, "speaker");
  }
  r.finish();
  s->started = parse_timestamp(s->scenario.outdoor.timestamp);
  s->household = s->scenario.household;
  s->sim = sim::initial_state(s->scenario);
  {
    std::unique_lock lock(sessions_mutex_);
    s->id = fmt::format("s{}", next_id_++);
    sessions_[s->id] = s;
  }
  std::lock_guard lock(s->mutex);
  save_locked(*s);
  return {{"session", s->id}, {"state", state_view(*s)}};
}

void Service::save_locked(const Session& s) const {
  if (!options_.store_dir) return;
  profile::persist(s.household, *options_.store_dir / (s.id + ".jsonl"));
}

json Service::handle_utterance(const std::string& id, std::string_view text) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  const auto result = extract::extract_via_backend(text, s->ctx, options_.extraction_backend.get(), lexicon_);
  const std::size_t before = s->household.change_log.size();
  s->household = profile::apply(result.records, std::move(s->household), at_clock(*s));
  save_locked(*s);
  json records = json::array();
  for (const auto& rec : result.records) records.push_back(to_json(rec));
  json outcomes = json::array();
  for (std::size_t i = before; i < s->household.change_log.size(); ++i) {
    outcomes.push_back(profile::to_string(s->household.change_log[i].outcome));
  }
  return {{"records", records},
          {"outcomes", outcomes},
          {"provenance", extract::to_string(result.provenance)},
          {"diagnostic", result.diagnostic},
          {"profile", profile::members_to_json(s->household)}};
}

planner::Scenario Service::current_scenario(const Session& s) const {
  planner::Scenario sc = s.scenario;
  sc.indoor = s.sim.indoor;
  sc.household = s.household;
  sc.device = s.sim.device;
  sc.outdoor.timestamp = format_timestamp(at_clock(s));
  return sc;
}

void Service::request_plan(const std::string& id, const PlanSink& sink) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  const auto sc = current_scenario(*s);
  const auto& seg = options_.config.segmentation;

  stream::StreamParser parser(seg);
  std::string reasoning;
  std::string carry;  // incomplete UTF-8 tail held back from the client
  std::optional<ControlPlan> adopted;
  std::optional<stream::ParseError> failure;
  bool sent_any = false;
  auto handle = [&](const std::vector<stream::StreamEvent>& events) {
    for (const auto& ev : events) {
      if (const auto* d = std::get_if<stream::ReasoningDelta>(&ev)) {
        reasoning += d->text;
      } else if (const auto* c = std::get_if<stream::CommandReady>(&ev)) {
        adopted = c->plan;
      } else if (const auto* e = std::get_if<stream::ParseError>(&ev)) {
        if (!failure) failure = *e;
      }
    }
  };
  auto forward = [&](std::string_view chunk) {
    carry.append(chunk);
    const std::size_t keep = incomplete_utf8_tail(carry);
    if (carry.size() > keep) {
      sink("delta", json(carry.substr(0, carry.size() - keep)));
      sent_any = true;
      carry.erase(0, carry.size() - keep);
    }
    handle(parser.feed(chunk));
  };
  auto close = [&] {
    if (!carry.empty()) sink("delta", json(std::exchange(carry, {})));
    handle(parser.finish());
  };

  std::string source = "planner";
  bool streamed = false;
  if (options_.planning_backend) {
    try {
      options_.planning_backend->submit(eval::planning_prompt(sc), forward);
      close();
      streamed = true;
      source = "backend";
    } catch (const std::exception& e) {
      if (sent_any) {
        sink("error", {{"message", fmt::format("backend stream failed: {}", e.what())}, {"offset", nullptr}});
        return;
      }
      parser = stream::StreamParser(seg);
      carry.clear();
      sink("notice", json{{"message", fmt::format("backend unavailable: {}", e.what())}});
    }
  }
  if (!streamed) {
    const auto out = planner::plan(sc, kb_);
    for (const auto& chunk : utf8_chunks(stream::render(out.chain, out.plan, seg), options_.plan_chunk_bytes)) {
      forward(chunk);
    }
    close();
  }

  if (adopted && !failure) {
    ReasoningChain chain;
    try {
      chain = stream::parse_chain(reasoning);
    } catch (const SchemaError&) {
      chain.perception = reasoning;
    }
    s->plan = planner::PlanOutput{*adopted, chain};
    s->sim = sim::apply_plan(s->sim, *adopted);
    s->last_plan_clock = s->sim.clock;
    sink("done", {{"plan", to_json(*adopted)}, {"chain", to_json(chain)}, {"source", source}});
  } else {
    const auto err = failure.value_or(stream::ParseError{"no command region in response", 0});
    sink("error", {{"message", err.message}, {"offset", err.offset}});
  }
}

void Service::replan_locked(Session& s) {
  auto out = planner::plan(current_scenario(s), kb_);
  s.sim = sim::apply_plan(s.sim, out.plan);
  s.plan = std::move(out);
  s.last_plan_clock = s.sim.clock;
}

json Service::advance(const std::string& id, double minutes) {
  if (!(minutes > 0.0) || !std::isfinite(minutes)) throw std::invalid_argument("minutes must be positive");
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  const auto& cfg = options_.config;
  const double dt = cfg.sim.dt_minutes;
  const auto steps = static_cast<std::size_t>(std::ceil(minutes / dt - 1e-9));
  if (!s->plan) replan_locked(*s);
  for (std::size_t i = 0; i < steps; ++i) {
    if (cfg.replan_every_minutes > 0.0 && s->sim.clock + 1e-9 >= s->last_plan_clock + cfg.replan_every_minutes) {
      replan_locked(*s);
    }
    s->sim = sim::step(s->sim, s->plan->plan, s->scenario.outdoor, cfg.sim, dt);
  }
  if (cfg.condition_ttl) {
    const std::size_t before = s->household.change_log.size();
    s->household = profile::expire_stale(std::move(s->household), at_clock(*s), cfg.condition_ttl);
    if (s->household.change_log.size() != before) save_locked(*s);
  }
  return state_view(*s);
}

json Service::perturb(const std::string& id, const std::map<std::string, double>& deltas) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  s->sim = sim::perturb(s->sim, deltas);
  return state_view(*s);
}

json Service::state_view(const Session& s) const {
  json plan = nullptr;
  json switches = nullptr;
  if (s.plan) {
    plan = {{"plan", to_json(s.plan->plan)}, {"chain", to_json(s.plan->chain)}, {"clock", s.last_plan_clock}};
    const auto sw = sim::tick_scheduler(s.sim, s.plan->plan);
    switches = switches_json(sw.level);
  }
  return {{"session", s.id},
          {"clock", s.sim.clock},
          {"time", format_timestamp(at_clock(s))},
          {"outdoor", to_json(s.scenario.outdoor)},
          {"indoor", to_json(s.sim.indoor)},
          {"device", to_json(s.sim.device)},
          {"plan", plan},
          {"switches", switches}};
}

json Service::state(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return state_view(*s);
}

json Service::profile(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  const auto& h = s->household;
  json log = json::array();
  for (const auto& e : h.change_log) log.push_back(profile::to_json(e));
  return {{"session", s->id}, {"members", profile::members_to_json(h)}, {"change_log", log}};
}

json Service::run_eval(const json& body) const {
  ObjectReader r(body, "");
  std::vector<eval::CorpusCase> cases;
  if (const auto* path = r.optional("corpus")) {
    cases = eval::load_corpus(ObjectReader::as_string(*path, "corpus"));
  } else {
    const auto& list = r.required("cases");
    if (!list.is_array()) throw SchemaError("cases must be a list", "cases");
    std::string text;
    for (const auto& c : list) text += c.dump() + "\n";
    cases = eval::parse_corpus(text, "request");
  }
  std::string candidate = "planner";
  if (const auto* c = r.optional("candidate")) candidate = ObjectReader::as_string(*c, "candidate");
  bool include_cases = false;
  if (r.contains("include_cases")) include_cases = r.boolean("include_cases");
  r.finish();

  std::unique_ptr<eval::CandidateSource> source;
  if (candidate == "planner") {
    source = std::make_unique<eval::PlannerSource>(kb_);
  } else if (candidate == "backend") {
    if (!options_.planning_backend) throw std::invalid_argument("no planning backend configured");
    source = std::make_unique<eval::BackendSource>(options_.planning_backend, options_.config.segmentation);
  } else {
    source = std::make_unique<eval::FileSource>(candidate);
  }
  const auto report = eval::run_corpus(cases, *source, kb_, options_.config.pass_policy);
  json out = eval::to_json(report, include_cases);
  out["table"] = eval::render_table(report);
  return out;
}

}  // namespace airsteward::service
