#pragma once

// Session-oriented facade over extraction, profiles, planning, the simulator
// and the evaluator. The HTTP server and the CLI REPL are thin layers on top.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "airsteward/backend.hpp"
#include "airsteward/config.hpp"
#include "airsteward/extractor.hpp"
#include "airsteward/planner.hpp"
#include "airsteward/profile.hpp"
#include "airsteward/sim.hpp"

namespace airsteward::service {

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Called once per streamed event. "delta" carries raw semi-stream bytes as a
/// JSON string; the stream ends with "done" {plan, chain, source} or "error"
/// {message, offset}. "notice" reports a backend fallback.
using PlanSink = std::function<void(std::string_view event, const nlohmann::json& data)>;

struct Session {
  std::string id;
  planner::Scenario scenario;
  Timestamp started{};
  extract::SessionContext ctx;
  profile::Household household;
  sim::SimState sim;
  std::optional<planner::PlanOutput> plan;
  double last_plan_clock = 0.0;
  std::mutex mutex;
};

struct ServiceOptions {
  Config config;
  /// Extraction backend; null means lexicon only.
  std::shared_ptr<extract::BackendAdapter> extraction_backend;
  /// Planning backend; null means the reference planner.
  std::shared_ptr<extract::BackendAdapter> planning_backend;
  /// When set, each session's profile log is written to <dir>/<id>.jsonl
  /// after every change.
  std::optional<std::filesystem::path> store_dir;
  std::size_t plan_chunk_bytes = 48;
};

class Service {
 public:
  explicit Service(ServiceOptions options);

  /// Body: {"scenario"?: Scenario, "speaker"?: group}. The demo scenario is
  /// used when none is given. Returns {"session": id, "state": ...}.
  nlohmann::json create_session(const nlohmann::json& body);
  /// Extracts tags, applies them and returns {records, outcomes, provenance,
  /// diagnostic, profile}.
  nlohmann::json handle_utterance(const std::string& id, std::string_view text);
  /// Plans from the session's current state and streams the semi-structured
  /// text. The session adopts the plan when the command region parses.
  void request_plan(const std::string& id, const PlanSink& sink);
  nlohmann::json advance(const std::string& id, double minutes);
  nlohmann::json perturb(const std::string& id, const std::map<std::string, double>& deltas);
  nlohmann::json state(const std::string& id);
  nlohmann::json profile(const std::string& id);
  /// Body: {"corpus": path | "cases": [...], "candidate"?: "planner" | "backend" | path,
  /// "include_cases"?: bool}.
  nlohmann::json run_eval(const nlohmann::json& body) const;

  std::vector<std::string> session_ids() const;
  const Config& config() const { return options_.config; }
  const planner::KnowledgeBase& knowledge_base() const { return kb_; }

 private:
  std::shared_ptr<Session> find(const std::string& id) const;
  planner::Scenario current_scenario(const Session& s) const;
  nlohmann::json state_view(const Session& s) const;
  void replan_locked(Session& s);
  void save_locked(const Session& s) const;

  ServiceOptions options_;
  planner::KnowledgeBase kb_;
  extract::Lexicon lexicon_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// Splits text into pieces of at most `size` bytes without cutting a UTF-8
/// sequence.
std::vector<std::string> utf8_chunks(std::string_view text, std::size_t size);

}  // namespace airsteward::service
