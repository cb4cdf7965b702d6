#include "airsteward/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "airsteward/codec.hpp"
#include "airsteward/json_reader.hpp"
#include "embedded_data.hpp"

namespace airsteward {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

stream::SegmentationConfig segmentation_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  stream::SegmentationConfig s;
  if (r.contains("reasoning_open")) s.reasoning_open = r.string("reasoning_open");
  if (r.contains("reasoning_close")) s.reasoning_close = r.string("reasoning_close");
  if (r.contains("command_open")) s.command_open = r.string("command_open");
  if (r.contains("command_close")) s.command_close = r.string("command_close");
  if (r.contains("strict")) s.strict = r.boolean("strict");
  r.finish();
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(fmt::format("{}: {}", path, e.what()), path);
  }
  return s;
}

}  // namespace

Config config_from_json(const json& j, const std::filesystem::path& base_dir) {
  ObjectReader r(j, "");
  Config c;
  if (const auto* v = r.optional("segmentation")) c.segmentation = segmentation_from_json(*v, "segmentation");
  if (const auto* v = r.optional("knowledge_base")) {
    c.knowledge_base_path = resolve(base_dir, ObjectReader::as_string(*v, "knowledge_base"));
  }
  if (const auto* v = r.optional("lexicon")) c.lexicon_path = resolve(base_dir, ObjectReader::as_string(*v, "lexicon"));
  if (const auto* v = r.optional("sim")) c.sim = sim::sim_params_from_json(*v, "sim");
  if (r.contains("replan_every_minutes")) c.replan_every_minutes = r.non_negative("replan_every_minutes");
  if (const auto* v = r.optional("pass_policy")) c.pass_policy = eval::pass_policy_from_json(*v, "pass_policy");
  if (const auto* v = r.optional("profile")) {
    ObjectReader p(*v, "profile");
    if (p.contains("store_dir")) c.store_dir = resolve(base_dir, p.string("store_dir"));
    if (const auto ttl = p.optional_number("condition_ttl_hours")) {
      if (!(*ttl > 0.0)) throw SchemaError("profile.condition_ttl_hours must be positive", "profile.condition_ttl_hours");
      c.condition_ttl = std::chrono::seconds(static_cast<long long>(*ttl * 3600.0));
    }
    p.finish();
  }
  if (const auto* v = r.optional("backend")) {
    ObjectReader b(*v, "backend");
    if (b.contains("url")) c.backend.url = b.string("url");
    if (b.contains("timeout_ms")) c.backend.timeout = std::chrono::milliseconds(static_cast<long long>(b.positive("timeout_ms")));
    if (b.contains("retries")) {
      c.backend.retries = b.integer("retries");
      if (c.backend.retries < 0) throw SchemaError("backend.retries must be non-negative", "backend.retries");
    }
    b.finish();
  }
  if (const auto* v = r.optional("server")) {
    ObjectReader s(*v, "server");
    if (s.contains("host")) c.host = s.string("host");
    if (s.contains("port")) {
      c.port = s.integer("port");
      if (c.port < 0 || c.port > 65535) throw SchemaError("server.port must be within [0, 65535]", "server.port");
    }
    s.finish();
  }
  r.finish();
  return c;
}

json to_json(const Config& c) {
  json out = {{"segmentation",
               {{"reasoning_open", c.segmentation.reasoning_open},
                {"reasoning_close", c.segmentation.reasoning_close},
                {"command_open", c.segmentation.command_open},
                {"command_close", c.segmentation.command_close},
                {"strict", c.segmentation.strict}}},
              {"knowledge_base", c.knowledge_base_path ? json(c.knowledge_base_path->string()) : json(nullptr)},
              {"lexicon", c.lexicon_path ? json(c.lexicon_path->string()) : json(nullptr)},
              {"sim", sim::to_json(c.sim)},
              {"replan_every_minutes", c.replan_every_minutes},
              {"pass_policy", eval::to_json(c.pass_policy)},
              {"profile",
               {{"store_dir", c.store_dir.string()},
                {"condition_ttl_hours",
                 c.condition_ttl ? json(static_cast<double>(c.condition_ttl->count()) / 3600.0) : json(nullptr)}}},
              {"backend",
               {{"url", c.backend.url},
                {"timeout_ms", c.backend.timeout.count()},
                {"retries", c.backend.retries}}},
              {"server", {{"host", c.host}, {"port", c.port}}}};
  return out;
}

planner::KnowledgeBase Config::knowledge_base() const {
  return knowledge_base_path ? planner::load_knowledge_base(*knowledge_base_path) : planner::default_knowledge_base();
}

extract::Lexicon Config::lexicon() const {
  return lexicon_path ? extract::load_lexicon(*lexicon_path) : extract::default_lexicon();
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open config {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(parse_json(buf.str()), path.parent_path());
}

const Config& default_config() {
  static const Config c = config_from_json(parse_json(embedded::k_config));
  return c;
}

Config resolve_config(const std::optional<std::filesystem::path>& explicit_path) {
  Config c;
  if (explicit_path) {
    c = load_config(*explicit_path);
  } else if (const char* env = std::getenv("AIRSTEWARD_CONFIG"); env && *env) {
    c = load_config(env);
  } else {
    c = default_config();
  }
  if (const char* url = std::getenv("AIRSTEWARD_BACKEND_URL"); url && *url) c.backend.url = url;
  return c;
}

}  // namespace airsteward
