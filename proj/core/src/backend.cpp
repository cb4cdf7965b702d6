#include "airsteward/backend.hpp"

#include <cstdlib>

#include <fmt/format.h>
#include <httplib.h>

#include "airsteward/codec.hpp"

namespace airsteward::extract {

using nlohmann::json;

BackendConfig BackendConfig::from_env() {
  BackendConfig cfg;
  if (const char* url = std::getenv("AIRSTEWARD_BACKEND_URL")) cfg.url = url;
  return cfg;
}

HttpBackendAdapter::HttpBackendAdapter(BackendConfig config) : config_(std::move(config)) {
  const auto scheme = config_.url.find("://");
  const auto path_start = config_.url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) {
    origin_ = config_.url;
    path_ = "/";
  } else {
    origin_ = config_.url.substr(0, path_start);
    path_ = config_.url.substr(path_start);
  }
}

void HttpBackendAdapter::submit(const std::string& prompt, const ChunkSink& on_chunk) {
  if (config_.url.empty()) throw BackendError(BackendError::Kind::Transport, "no backend url");
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);

  std::string last_error;
  BackendError::Kind last_kind = BackendError::Kind::Transport;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    httplib::Client client(origin_);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());

    // Chunks are buffered per attempt so a failed attempt never leaks partial
    // output to the caller.
    std::string body;
    httplib::Request req;
    req.method = "POST";
    req.path = path_;
    req.body = json{{"prompt", prompt}}.dump();
    req.set_header("Content-Type", "application/json");
    req.set_header("Accept", "text/plain, text/event-stream");
    req.content_receiver = [&](const char* data, std::size_t len, std::uint64_t, std::uint64_t) {
      body.append(data, len);
      return true;
    };
    httplib::Response res;
    httplib::Error err = httplib::Error::Success;
    if (client.send(req, res, err) && res.status >= 200 && res.status < 300) {
      on_chunk(body);
      return;
    }
    if (err == httplib::Error::Success) {
      last_error = fmt::format("backend returned HTTP {}", res.status);
      last_kind = BackendError::Kind::Transport;
    } else {
      last_error = httplib::to_string(err);
      last_kind = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout
                      ? BackendError::Kind::Timeout
                      : BackendError::Kind::Transport;
    }
  }
  throw BackendError(last_kind, last_error);
}

std::string build_extraction_prompt(std::string_view utterance, const SessionContext& ctx) {
  json context = json::object();
  if (ctx.last_mentioned_group) context["last_mentioned_group"] = to_string(*ctx.last_mentioned_group);
  if (ctx.speaker_default_group) {
    context["speaker_default_group"] = to_string(*ctx.speaker_default_group);
  }
  context["history"] = json::array();
  for (const auto& u : ctx.utterance_history) context["history"].push_back(u);
  return fmt::format(
      "Extract household memory tags from the utterance. Reply with a JSON array of objects "
      "{{\"group\", \"action\", \"condition\"?, \"preference\"?}}. Groups: adult_male, "
      "adult_female, child, elderly, other. Actions: add_condition, remove_condition, "
      "set_preference. Conditions: cold, fever, cough, rhinitis, asthma, menstruation. "
      "Preferences: very_cold_sensitive, slightly_cold_sensitive, neutral, "
      "slightly_heat_sensitive, very_heat_sensitive.\nContext: {}\nUtterance: {}",
      canonical_dump(context), utterance);
}

std::vector<MemoryTagRecord> parse_backend_records(std::string_view text) {
  const auto open = text.find('[');
  const auto close = text.rfind(']');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    throw DecodeError("backend response holds no JSON array", open == std::string_view::npos ? 0 : open);
  }
  json arr;
  try {
    arr = parse_json(text.substr(open, close - open + 1));
  } catch (const DecodeError& e) {
    throw DecodeError(e.what(), open + e.offset());
  }
  std::vector<MemoryTagRecord> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(record_from_json(arr[i], fmt::format("[{}]", i)));
  }
  return out;
}

ExtractionResult extract_via_backend(std::string_view utterance, SessionContext& ctx,
                                     BackendAdapter* adapter, const Lexicon& lexicon) {
  const std::string prompt = adapter ? build_extraction_prompt(utterance, ctx) : std::string();
  ExtractionResult result;
  result.records = extract(utterance, ctx, lexicon);
  if (!adapter) return result;

  const std::string source_id = fmt::format("utt-{}", ctx.utterance_count);
  try {
    std::string text;
    adapter->submit(prompt, [&](std::string_view chunk) { text.append(chunk); });
    auto records = parse_backend_records(text);
    for (auto& r : records) r.source_utterance_id = source_id;
    result.records = std::move(records);
    result.provenance = Provenance::Backend;
  } catch (const std::exception& e) {
    result.provenance = Provenance::Fallback;
    result.diagnostic = e.what();
  }
  return result;
}

}  // namespace airsteward::extract
