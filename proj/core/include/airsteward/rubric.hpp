#pragma once

// The 25-rule weighted rubric. Every scorer is a pure function of the case
// context, the candidate and the ground truth; a candidate that equals the
// truth on a rule's attributes always earns that rule's full weight.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "airsteward/planner.hpp"
#include "airsteward/schema.hpp"

namespace airsteward::eval {

struct RubricRule {
  int id = 0;
  std::string_view dimension;
  int weight = 0;  // percent; rules 16 to 20 carry none of their own
};

inline constexpr int kRuleCount = 25;

const std::array<RubricRule, kRuleCount>& rubric();
const RubricRule& rule(int id);  // throws std::out_of_range
int total_weight();

/// A model answer. `plan` is empty when the answer could not be decoded.
struct Candidate {
  std::optional<ControlPlan> plan;
  ReasoningChain chain;
  std::string diagnostic;
};

struct Truth {
  ControlPlan plan;
  ReasoningChain chain;
  bool operator==(const Truth&) const = default;
};

/// Scenario facts the scorers need.
struct CaseContext {
  planner::Assessment assessment;
  SensorSnapshot indoor;
};

CaseContext make_context(const planner::Scenario& scenario, const planner::KnowledgeBase& kb);

struct RuleScore {
  int points = 0;
  int weight = 0;
  std::string reason;
  bool operator==(const RuleScore&) const = default;
};

/// A case passes when total >= min_total and, if forbid_zero_major is set, no
/// rule weighing major_weight or more scored 0.
struct PassPolicy {
  int min_total = 80;
  bool forbid_zero_major = true;
  int major_weight = 10;
  bool operator==(const PassPolicy&) const = default;
};

struct RuleScoreReport {
  std::map<int, RuleScore> per_rule;
  int total = 0;
  bool passed = false;
  PassPolicy policy;
  std::vector<std::string> diagnostics;
};

/// Throws std::out_of_range for an id outside 1..25.
RuleScore score_rule(int id, const CaseContext& ctx, const Candidate& candidate, const Truth& truth);
RuleScoreReport score_case(const CaseContext& ctx, const Candidate& candidate, const Truth& truth,
                           const PassPolicy& policy = {});
bool passes(const RuleScoreReport& report, const PassPolicy& policy);

nlohmann::json to_json(const PassPolicy& policy);
PassPolicy pass_policy_from_json(const nlohmann::json& j, const std::string& path = "");
nlohmann::json to_json(const RuleScoreReport& report);

}  // namespace airsteward::eval
