#pragma once

// Runtime configuration. Every field has a default; a config file only needs
// the keys it changes.

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "airsteward/backend.hpp"
#include "airsteward/knowledge.hpp"
#include "airsteward/lexicon.hpp"
#include "airsteward/rubric.hpp"
#include "airsteward/sim.hpp"
#include "airsteward/stream_parser.hpp"

namespace airsteward {

struct Config {
  stream::SegmentationConfig segmentation;
  std::optional<std::filesystem::path> knowledge_base_path;
  std::optional<std::filesystem::path> lexicon_path;
  sim::SimParams sim;
  double replan_every_minutes = 30.0;
  eval::PassPolicy pass_policy;
  std::filesystem::path store_dir = "airsteward-data";
  std::optional<std::chrono::seconds> condition_ttl;
  extract::BackendConfig backend;
  std::string host = "127.0.0.1";
  int port = 8080;

  /// The knowledge base at knowledge_base_path, or the shipped one.
  planner::KnowledgeBase knowledge_base() const;
  extract::Lexicon lexicon() const;
};

/// Relative paths in the document resolve against `base_dir`.
Config config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const Config& c);

/// Reads a JSON config file. Throws std::runtime_error when it cannot be
/// opened, DecodeError / SchemaError when it is malformed.
Config load_config(const std::filesystem::path& path);

/// Built-in defaults (data/config.json).
const Config& default_config();

/// `explicit_path` if given, else $AIRSTEWARD_CONFIG if set, else defaults.
/// AIRSTEWARD_BACKEND_URL overrides backend.url either way.
Config resolve_config(const std::optional<std::filesystem::path>& explicit_path);

}  // namespace airsteward
