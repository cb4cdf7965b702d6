#pragma once

// Remote extraction backend. Anything the backend returns is validated through
// the schema; any failure falls back to the lexicon extractor.

#include <chrono>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "airsteward/extractor.hpp"
#include "airsteward/schema.hpp"

namespace airsteward::extract {

class BackendError : public std::runtime_error {
 public:
  enum class Kind { Transport, Timeout };
  BackendError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct BackendConfig {
  std::string url;  // e.g. "http://127.0.0.1:9000/generate"
  std::chrono::milliseconds timeout{10000};
  int retries = 1;

  /// url from AIRSTEWARD_BACKEND_URL (empty when unset).
  static BackendConfig from_env();
};

using ChunkSink = std::function<void(std::string_view)>;

class BackendAdapter {
 public:
  virtual ~BackendAdapter() = default;
  /// Streams the response text to on_chunk. Throws BackendError.
  virtual void submit(const std::string& prompt, const ChunkSink& on_chunk) = 0;
};

/// POSTs {"prompt": ...} as JSON and streams the response body.
class HttpBackendAdapter : public BackendAdapter {
 public:
  explicit HttpBackendAdapter(BackendConfig config);
  void submit(const std::string& prompt, const ChunkSink& on_chunk) override;
  const BackendConfig& config() const { return config_; }

 private:
  BackendConfig config_;
  std::string origin_;
  std::string path_;
};

enum class Provenance { Lexicon, Backend, Fallback };

constexpr std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Lexicon:
      return "lexicon";
    case Provenance::Backend:
      return "backend";
    case Provenance::Fallback:
      return "fallback";
  }
  return "lexicon";
}

struct ExtractionResult {
  std::vector<MemoryTagRecord> records;
  Provenance provenance = Provenance::Lexicon;
  std::string diagnostic;  // why the backend result was rejected
};

/// Instruction prompt sent to the backend for one utterance.
std::string build_extraction_prompt(std::string_view utterance, const SessionContext& ctx);

/// Parses the JSON array embedded in a backend response (first '[' through last
/// ']'). Throws DecodeError or SchemaError.
std::vector<MemoryTagRecord> parse_backend_records(std::string_view text);

/// Backend extraction with lexicon fallback. `adapter` may be null, which means
/// lexicon-only. ctx is updated exactly as extract() would update it.
ExtractionResult extract_via_backend(std::string_view utterance, SessionContext& ctx,
                                     BackendAdapter* adapter,
                                     const Lexicon& lexicon = default_lexicon());

}  // namespace airsteward::extract
