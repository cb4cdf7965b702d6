#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "airsteward/schema.hpp"

namespace airsteward::extract {

/// Phrase tables driving the reference extractor. Phrases are matched
/// case-insensitively on whole words; the longest phrase at a position wins.
struct Lexicon {
  std::string language = "en";
  std::map<std::string, PopulationGroup> group_aliases;
  std::map<std::string, HealthCondition> condition_triggers;
  std::map<std::string, ThermalPreference> preference_triggers;
  std::vector<std::string> recovery_cues;
  // Pronoun tables are optional in the file; they default to English.
  std::vector<std::string> first_person;
  std::vector<std::string> third_person;
  std::vector<std::string> condition_anaphora;

  bool operator==(const Lexicon&) const = default;
};

/// The shipped English lexicon (data/lexicon.en.json).
const Lexicon& default_lexicon();

/// Throws SchemaError for bad entries or an empty recovery_cues list.
Lexicon lexicon_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Lexicon& lexicon);
Lexicon load_lexicon(const std::filesystem::path& path);

}  // namespace airsteward::extract
