#pragma once

// Incremental splitter for a semi-streamed model output: a reasoning region
// that is forwarded as it arrives, then a command region that is buffered and
// decoded as a whole.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "airsteward/schema.hpp"

namespace airsteward::stream {

struct SegmentationConfig {
  std::string reasoning_open = "<REASONING>";
  std::string reasoning_close = "</REASONING>";
  std::string command_open = "<COMMAND>";
  std::string command_close = "</COMMAND>";
  /// Strict mode reports text outside both regions; lenient mode drops it
  /// with a diagnostic.
  bool strict = true;

  /// Throws std::invalid_argument unless the four sentinels are non-empty,
  /// distinct and none contains another.
  void validate() const;
  std::size_t max_sentinel() const;
  bool operator==(const SegmentationConfig&) const = default;
};

struct ReasoningDelta {
  std::string text;
  bool operator==(const ReasoningDelta&) const = default;
};
struct ReasoningDone {
  bool operator==(const ReasoningDone&) const = default;
};
struct CommandReady {
  ControlPlan plan;
  bool operator==(const CommandReady&) const = default;
};
struct ParseError {
  std::string message;
  std::size_t offset = 0;  // absolute byte offset in the stream
  bool operator==(const ParseError&) const = default;
};

using StreamEvent = std::variant<ReasoningDelta, ReasoningDone, CommandReady, ParseError>;

class StreamParser {
 public:
  explicit StreamParser(SegmentationConfig cfg = {});

  std::vector<StreamEvent> feed(std::string_view chunk);
  /// Flushes held-back reasoning and reports unterminated regions. Further
  /// feed() calls after finish() are errors.
  std::vector<StreamEvent> finish();

  /// Stray-text notes collected in lenient mode.
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }
  /// Bytes held back outside the command region.
  std::size_t held_bytes() const { return state_ == State::Command ? 0 : pending_.size(); }
  const SegmentationConfig& config() const { return cfg_; }

 private:
  enum class State { Before, Reasoning, Between, Command, Done, Finished };

  void process(std::vector<StreamEvent>& out, bool final);
  void scan_outside(std::vector<StreamEvent>& out, bool final);
  void scan_reasoning(std::vector<StreamEvent>& out, bool final);
  void scan_command(std::vector<StreamEvent>& out);
  void extend_stray(std::size_t begin, std::size_t len);
  void close_stray(std::vector<StreamEvent>& out);
  void consume(std::size_t n);

  SegmentationConfig cfg_;
  State state_ = State::Before;
  std::string pending_;
  std::size_t base_ = 0;  // absolute offset of pending_[0]
  std::size_t command_scan_ = 0;
  std::size_t region_start_ = 0;
  std::optional<std::size_t> stray_start_;
  std::string stray_text_;
  bool reasoning_seen_ = false;
  std::vector<std::string> diagnostics_;
};

/// Feeds `text` as one chunk and finishes.
std::vector<StreamEvent> parse_whole(std::string_view text, const SegmentationConfig& cfg = {});

/// Joins adjacent ReasoningDelta events so event lists from different
/// chunkings can be compared.
std::vector<StreamEvent> coalesce(const std::vector<StreamEvent>& events);

/// "(1) Environment & User-State Perception: ..." through "(5) Reasoning &
/// Scheduling: ...", one step per line.
std::string render_chain(const ReasoningChain& chain);
/// Inverse of render_chain. Throws SchemaError when a step header is missing.
ReasoningChain parse_chain(std::string_view text);

/// Full semi-stream: reasoning region then command region.
std::string render(const ReasoningChain& chain, const ControlPlan& plan,
                   const SegmentationConfig& cfg = {});

}  // namespace airsteward::stream
