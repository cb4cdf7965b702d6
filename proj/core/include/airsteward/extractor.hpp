#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "airsteward/lexicon.hpp"
#include "airsteward/schema.hpp"

namespace airsteward::extract {

/// Per-session dialogue state. Owned by exactly one session.
struct SessionContext {
  static constexpr std::size_t kDefaultHistory = 16;

  std::optional<PopulationGroup> last_mentioned_group;
  std::optional<PopulationGroup> speaker_default_group;
  std::deque<std::string> utterance_history;
  std::size_t history_capacity = kDefaultHistory;
  std::uint64_t utterance_count = 0;

  /// Appends to the bounded history and bumps the utterance counter.
  void remember(std::string utterance);
};

struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const ByteSpan&) const = default;
};

/// A recovery cue paired with the condition it expires. An empty `condition`
/// means the cue had nothing to pair with and expires every condition of the
/// resolved subject.
struct RecoveryFinding {
  std::optional<HealthCondition> condition;
  ByteSpan cue;
  std::optional<ByteSpan> condition_span;

  bool operator==(const RecoveryFinding&) const = default;
};

enum class MatchKind { Cue, Condition, Preference, Alias, FirstPerson, ThirdPerson, Anaphor };

/// One tokenized lexicon phrase. `value` is the enum payload for Alias,
/// Condition and Preference entries.
struct PhraseEntry {
  std::vector<std::string> tokens;
  MatchKind kind = MatchKind::Cue;
  int value = 0;
};

/// Lexicon indexed by first token, longest phrase first.
class CompiledLexicon {
 public:
  explicit CompiledLexicon(const Lexicon& lexicon);

  /// nullptr when no phrase starts with `first_token`.
  const std::vector<PhraseEntry>* candidates(const std::string& first_token) const;
  const Lexicon& source() const { return source_; }

 private:
  Lexicon source_;
  std::unordered_map<std::string, std::vector<PhraseEntry>> index_;
};

/// Splits text the same way utterances are split: lowercase, apostrophes and
/// punctuation separate words, hyphens stay inside words.
std::vector<std::string> tokenize_phrase(std::string_view phrase);

/// Reference extraction: deterministic in (utterance, ctx, lexicon). Updates
/// ctx.last_mentioned_group when an explicit alias occurs and appends the
/// utterance to ctx history. Unrecognized text yields an empty list.
std::vector<MemoryTagRecord> extract(std::string_view utterance, SessionContext& ctx,
                                     const CompiledLexicon& lexicon);
std::vector<MemoryTagRecord> extract(std::string_view utterance, SessionContext& ctx,
                                     const Lexicon& lexicon = default_lexicon());

/// Recovery cues in the utterance, paired with conditions in the same clause.
/// A cue in a clause that only refers back to an earlier condition ("it's all
/// good now") pairs with every earlier condition mention.
std::vector<RecoveryFinding> detect_recovery(std::string_view utterance,
                                             const Lexicon& lexicon = default_lexicon());

/// Subject of an utterance: explicit group alias, then a first-person pronoun
/// when the speaker's group is known, then ctx.last_mentioned_group, then
/// ctx.speaker_default_group, then Other.
PopulationGroup resolve_subject(std::string_view utterance, const SessionContext& ctx,
                                const Lexicon& lexicon = default_lexicon());

}  // namespace airsteward::extract
