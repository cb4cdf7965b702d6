#include "airsteward/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "airsteward/codec.hpp"
#include "airsteward/json_reader.hpp"

namespace airsteward::eval {

using nlohmann::json;

namespace {

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    ++lineno;
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) fn(line, lineno);
    start = end + 1;
  }
}

std::string read_file(const std::filesystem::path& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open {} {}", what, path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}


}  // namespace

std::string planning_prompt(const planner::Scenario& scenario) {
  return fmt::format(
      "Plan the air system for this scenario. Answer with the five reasoning steps inside the "
      "reasoning sentinels, then the control plan JSON inside the command sentinels.\nScenario: {}",
      canonical_dump(planner::to_json(scenario)));
}

std::vector<CorpusCase> parse_corpus(std::string_view text, const std::string& name) {
  std::vector<CorpusCase> out;
  for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    try {
      const json j = parse_json(line);
      ObjectReader r(j, "");
      CorpusCase c;
      c.id = r.contains("id") ? r.string("id") : fmt::format("line-{}", lineno);
      c.scenario = planner::scenario_from_json(r.required("scenario"), "scenario");
      c.scenario.id = c.id;
      ObjectReader t(r.required("truth"), "truth");
      c.truth.plan = plan_from_json(t.required("plan"), "truth.plan");
      c.truth.chain = chain_from_json(t.required("chain"), "truth.chain");
      t.finish();
      r.finish();
      out.push_back(std::move(c));
    } catch (const std::exception& e) {
      throw CorpusError(fmt::format("{}:{}: {}", name, lineno, e.what()), lineno);
    }
  });
  return out;
}

std::vector<CorpusCase> load_corpus(const std::filesystem::path& path) {
  return parse_corpus(read_file(path, "corpus"), path.string());
}

json to_json(const CorpusCase& c) {
  json scenario = planner::to_json(c.scenario);
  scenario.erase("id");
  return {{"id", c.id},
          {"scenario", scenario},
          {"truth", {{"plan", airsteward::to_json(c.truth.plan)}, {"chain", airsteward::to_json(c.truth.chain)}}}};
}

CorpusCase make_case(std::string id, const planner::Scenario& scenario, const planner::KnowledgeBase& kb) {
  const auto out = planner::plan(scenario, kb);
  CorpusCase c{std::move(id), scenario, Truth{out.plan, out.chain}};
  c.scenario.id = c.id;
  return c;
}

Candidate PlannerSource::produce(const CorpusCase& c) const {
  const auto out = planner::plan(c.scenario, kb_);
  return Candidate{out.plan, out.chain, {}};
}

FileSource::FileSource(const std::filesystem::path& path) : path_(path.string()) {
  const std::string text = read_file(path, "candidate file");
  for_each_line(text, [&](std::string_view line, std::size_t lineno) {
    json j;
    try {
      j = parse_json(line);
    } catch (const DecodeError& e) {
      throw CorpusError(fmt::format("{}:{}: {}", path_, lineno, e.what()), lineno);
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
      throw CorpusError(fmt::format("{}:{}: candidate needs a string id", path_, lineno), lineno);
    }
    Candidate cand;
    try {
      cand.chain = chain_from_json(j.value("chain", json::object()), "chain");
    } catch (const SchemaError& e) {
      cand.diagnostic = e.what();
    }
    try {
      cand.plan = plan_from_json(j.value("plan", json()), "plan");
    } catch (const SchemaError& e) {
      cand.diagnostic = e.what();
    }
    by_id_[j["id"].get<std::string>()] = std::move(cand);
  });
}

Candidate FileSource::produce(const CorpusCase& c) const {
  auto it = by_id_.find(c.id);
  if (it == by_id_.end()) return Candidate{std::nullopt, {}, fmt::format("no candidate for case {}", c.id)};
  return it->second;
}

BackendSource::BackendSource(std::shared_ptr<extract::BackendAdapter> adapter, stream::SegmentationConfig cfg)
    : adapter_(std::move(adapter)), cfg_(std::move(cfg)) {
  cfg_.strict = false;
}

Candidate BackendSource::produce(const CorpusCase& c) const {
  std::string text;
  try {
    adapter_->submit(planning_prompt(c.scenario), [&](std::string_view chunk) { text.append(chunk); });
  } catch (const std::exception& e) {
    return Candidate{std::nullopt, {}, fmt::format("backend failed: {}", e.what())};
  }
  return candidate_from_stream(text, cfg_);
}

Candidate candidate_from_stream(std::string_view text, const stream::SegmentationConfig& cfg) {
  Candidate cand;
  std::string reasoning;
  std::vector<std::string> errors;
  for (const auto& ev : stream::parse_whole(text, cfg)) {
    if (const auto* d = std::get_if<stream::ReasoningDelta>(&ev)) {
      reasoning += d->text;
    } else if (const auto* ready = std::get_if<stream::CommandReady>(&ev)) {
      cand.plan = ready->plan;
    } else if (const auto* err = std::get_if<stream::ParseError>(&ev)) {
      errors.push_back(fmt::format("byte {}: {}", err->offset, err->message));
    }
  }
  try {
    cand.chain = stream::parse_chain(reasoning);
  } catch (const SchemaError&) {
    cand.chain.perception = reasoning;
  }
  if (!errors.empty()) cand.diagnostic = errors.front();
  if (!cand.plan && cand.diagnostic.empty()) cand.diagnostic = "stream carried no command";
  return cand;
}

CorpusReport run_corpus(const std::vector<CorpusCase>& cases, const CandidateSource& source,
                        const planner::KnowledgeBase& kb, const PassPolicy& policy, unsigned threads) {
  CorpusReport report;
  report.policy = policy;
  report.candidate = source.name();
  report.cases = cases.size();
  report.results.resize(cases.size());

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, cases.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      const auto& c = cases[i];
      const Candidate cand = source.produce(c);
      report.results[i] = CaseResult{c.id, score_case(make_context(c.scenario, kb), cand, c.truth, policy)};
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::stable_sort(report.results.begin(), report.results.end(),
                   [](const CaseResult& a, const CaseResult& b) { return a.id < b.id; });

  long long total_points = 0;
  std::map<int, std::map<std::string, int>> reasons;
  for (const auto& r : report.results) {
    total_points += r.report.total;
    if (r.report.passed) ++report.passed;
    for (const auto& [id, s] : r.report.per_rule) {
      const int lost = s.weight - s.points;
      if (lost <= 0) continue;
      report.deductions[id].lost += lost;
      report.lost_total += lost;
      ++reasons[id][s.reason];
    }
  }
  if (report.cases > 0) {
    report.pass_rate = static_cast<double>(report.passed) / static_cast<double>(report.cases);
    report.mean_total = static_cast<double>(total_points) / static_cast<double>(report.cases);
  }
  for (auto& [id, d] : report.deductions) {
    d.share = static_cast<double>(d.lost) / static_cast<double>(report.lost_total);
    int best = 0;
    for (const auto& [reason, count] : reasons[id]) {
      if (count > best) {
        best = count;
        d.common_reason = reason;
      }
    }
  }
  return report;
}

json to_json(const CorpusReport& report, bool include_cases) {
  json deductions = json::array();
  for (const auto& [id, d] : report.deductions) {
    deductions.push_back({{"rule", id},
                          {"dimension", rule(id).dimension},
                          {"weight", rule(id).weight},
                          {"lost_points", d.lost},
                          {"share", d.share},
                          {"common_reason", d.common_reason}});
  }
  json out{{"cases", report.cases},
           {"passed", report.passed},
           {"pass_rate", report.pass_rate},
           {"mean_total", report.mean_total},
           {"lost_points", report.lost_total},
           {"candidate", report.candidate},
           {"policy", to_json(report.policy)},
           {"deductions", deductions}};
  if (include_cases) {
    json cases = json::array();
    for (const auto& r : report.results) {
      json c = to_json(r.report);
      c["id"] = r.id;
      cases.push_back(std::move(c));
    }
    out["results"] = std::move(cases);
  }
  return out;
}

std::string render_table(const CorpusReport& report) {
  std::vector<std::array<std::string, 4>> rows;
  rows.push_back({"Rule", "Weight (%)", "Deduction share", "Common deduction reason"});
  std::vector<std::pair<int, RuleDeduction>> sorted(report.deductions.begin(), report.deductions.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.second.lost > b.second.lost; });
  for (const auto& [id, d] : sorted) {
    rows.push_back({fmt::format("Rule {}: {}", id, rule(id).dimension), std::to_string(rule(id).weight),
                    fmt::format("{:.1f}%", d.share * 100.0), d.common_reason});
  }
  std::array<std::size_t, 4> width{};
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < 4; ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::string out = fmt::format("candidate: {}\ncases: {}  passed: {}  pass rate: {:.1f}%  mean total: {:.2f}\n",
                                report.candidate, report.cases, report.passed, report.pass_rate * 100.0,
                                report.mean_total);
  out += fmt::format("pass policy: total >= {}{}\n\n", report.policy.min_total,
                     report.policy.forbid_zero_major
                         ? fmt::format(" and no weight-{} rule at 0", report.policy.major_weight)
                         : std::string());
  if (rows.size() == 1) return out + "no points lost\n";
  for (const auto& row : rows) {
    out += fmt::format("{:<{}}  {:>{}}  {:>{}}  {}\n", row[0], width[0], row[1], width[1], row[2], width[2], row[3]);
  }
  return out;
}

}  // namespace airsteward::eval
