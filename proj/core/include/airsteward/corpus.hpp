#pragma once

// Corpus evaluation: score every case of a JSONL corpus against a candidate
// source and aggregate pass rate and deduction shares.

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airsteward/backend.hpp"
#include "airsteward/planner.hpp"
#include "airsteward/rubric.hpp"
#include "airsteward/stream_parser.hpp"

namespace airsteward::eval {

struct CorpusCase {
  std::string id;
  planner::Scenario scenario;
  Truth truth;
};

class CorpusError : public std::runtime_error {
 public:
  CorpusError(const std::string& what, std::size_t line) : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// One case per line: {id?, scenario, truth: {plan, chain}}. Blank lines are
/// skipped; a missing id becomes "line-<n>". Throws CorpusError.
std::vector<CorpusCase> parse_corpus(std::string_view text, const std::string& name = "corpus");
std::vector<CorpusCase> load_corpus(const std::filesystem::path& path);
nlohmann::json to_json(const CorpusCase& c);

/// Truth produced by the reference planner.
CorpusCase make_case(std::string id, const planner::Scenario& scenario, const planner::KnowledgeBase& kb);

/// Produces a candidate answer for a case. Implementations must tolerate
/// concurrent calls.
class CandidateSource {
 public:
  virtual ~CandidateSource() = default;
  virtual Candidate produce(const CorpusCase& c) const = 0;
  virtual std::string name() const = 0;
};

class PlannerSource : public CandidateSource {
 public:
  explicit PlannerSource(planner::KnowledgeBase kb) : kb_(std::move(kb)) {}
  Candidate produce(const CorpusCase& c) const override;
  std::string name() const override { return "planner"; }

 private:
  planner::KnowledgeBase kb_;
};

/// JSONL of {id, plan, chain}. A case without a line gets an empty candidate.
class FileSource : public CandidateSource {
 public:
  explicit FileSource(const std::filesystem::path& path);
  Candidate produce(const CorpusCase& c) const override;
  std::string name() const override { return path_; }

 private:
  std::string path_;
  std::map<std::string, Candidate> by_id_;
};

/// Asks a backend for a semi-stream and parses it leniently.
class BackendSource : public CandidateSource {
 public:
  BackendSource(std::shared_ptr<extract::BackendAdapter> adapter, stream::SegmentationConfig cfg);
  Candidate produce(const CorpusCase& c) const override;
  std::string name() const override { return "backend"; }

 private:
  std::shared_ptr<extract::BackendAdapter> adapter_;
  stream::SegmentationConfig cfg_;
};

/// Prompt asking a backend to plan `scenario` in the semi-stream format.
std::string planning_prompt(const planner::Scenario& scenario);

/// Folds a semi-stream into a candidate: the reasoning becomes the chain and
/// the command the plan.
Candidate candidate_from_stream(std::string_view text, const stream::SegmentationConfig& cfg);

struct CaseResult {
  std::string id;
  RuleScoreReport report;
};

struct RuleDeduction {
  int lost = 0;
  double share = 0.0;
  std::string common_reason;
};

struct CorpusReport {
  std::size_t cases = 0;
  std::size_t passed = 0;
  double pass_rate = 0.0;
  double mean_total = 0.0;
  int lost_total = 0;
  std::map<int, RuleDeduction> deductions;  // only rules that lost points
  PassPolicy policy;
  std::string candidate;
  std::vector<CaseResult> results;  // sorted by id
};

/// Scores every case, fanning out over `threads` workers (0 = hardware
/// concurrency). The report does not depend on case order or thread count.
CorpusReport run_corpus(const std::vector<CorpusCase>& cases, const CandidateSource& source,
                        const planner::KnowledgeBase& kb, const PassPolicy& policy = {},
                        unsigned threads = 0);

nlohmann::json to_json(const CorpusReport& report, bool include_cases = true);
/// Aligned text table: rule, weight, deduction share, most common reason.
std::string render_table(const CorpusReport& report);

}  // namespace airsteward::eval
