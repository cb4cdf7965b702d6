#include "airsteward/extractor.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include <fmt/format.h>

namespace airsteward::extract {
namespace {

struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t clause = 0;
};

struct Match {
  MatchKind kind;
  int value;
  std::size_t token_begin;
  std::size_t token_end;
  std::size_t clause;
  ByteSpan span;
};

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
         c >= 0x80;
}

// Multi-byte punctuation: curly quotes separate words, CJK full-width marks
// delimit clauses.
enum class Special { None, Separator, ClauseBreak };

Special special_at(std::string_view text, std::size_t i, std::size_t& width) {
  auto at = [&](std::size_t k) { return static_cast<unsigned char>(text[i + k]); };
  if (i + 3 <= text.size()) {
    width = 3;
    if (at(0) == 0xE2 && at(1) == 0x80 && (at(2) == 0x98 || at(2) == 0x99)) return Special::Separator;
    if (at(0) == 0xE3 && at(1) == 0x80 && at(2) == 0x82) return Special::ClauseBreak;  // 。
    if (at(0) == 0xEF && at(1) == 0xBC &&
        (at(2) == 0x8C || at(2) == 0x81 || at(2) == 0x9F || at(2) == 0x9B)) {
      return Special::ClauseBreak;  // ，！？；
    }
  }
  width = 1;
  return Special::None;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t clause = 0;
  Token current;
  bool in_word = false;

  auto flush = [&](std::size_t end) {
    if (!in_word) return;
    current.end = end;
    if (current.text.find_first_not_of('-') != std::string::npos) {
      current.clause = clause;
      tokens.push_back(std::move(current));
    }
    current = Token{};
    in_word = false;
  };

  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t width = 1;
    const Special special = special_at(text, i, width);
    if (special != Special::None) {
      flush(i);
      if (special == Special::ClauseBreak) ++clause;
      i += width;
      continue;
    }
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_word_byte(c)) {
      if (!in_word) {
        in_word = true;
        current.begin = i;
      }
      current.text.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    } else {
      flush(i);
      switch (c) {
        case ',':
        case ';':
        case ':':
        case '.':
        case '!':
        case '?':
        case '\n':
          ++clause;
          break;
        default:
          break;
      }
    }
    ++i;
  }
  flush(text.size());
  return tokens;
}

std::vector<Match> find_matches(const std::vector<Token>& tokens, const CompiledLexicon& lex) {
  std::vector<Match> matches;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const PhraseEntry* best = nullptr;
    if (const auto* cands = lex.candidates(tokens[i].text)) {
      for (const auto& entry : *cands) {
        const std::size_t n = entry.tokens.size();
        if (i + n > tokens.size()) continue;
        bool ok = true;
        for (std::size_t k = 0; k < n && ok; ++k) {
          ok = tokens[i + k].text == entry.tokens[k] && tokens[i + k].clause == tokens[i].clause;
        }
        if (ok) {
          best = &entry;
          break;
        }
      }
    }
    if (!best) {
      ++i;
      continue;
    }
    const std::size_t end = i + best->tokens.size();
    matches.push_back(Match{best->kind, best->value, i, end, tokens[i].clause,
                            ByteSpan{tokens[i].begin, tokens[end - 1].end}});
    i = end;
  }
  return matches;
}

bool is_mention(MatchKind k) {
  return k == MatchKind::Alias || k == MatchKind::FirstPerson || k == MatchKind::ThirdPerson;
}

// Recovery pairing over match indices. condition == npos means remove-all.
struct Pairing {
  std::size_t cue;
  std::size_t condition;
};
constexpr std::size_t npos = static_cast<std::size_t>(-1);

std::vector<Pairing> pair_recovery(const std::vector<Match>& matches) {
  std::vector<Pairing> out;
  std::set<std::size_t> paired;
  std::size_t i = 0;
  while (i < matches.size()) {
    const std::size_t clause = matches[i].clause;
    std::size_t j = i;
    while (j < matches.size() && matches[j].clause == clause) ++j;

    std::optional<std::size_t> first_cue;
    std::vector<std::size_t> conditions;
    bool anaphor = false;
    for (std::size_t k = i; k < j; ++k) {
      if (matches[k].kind == MatchKind::Cue && !first_cue) first_cue = k;
      if (matches[k].kind == MatchKind::Condition) conditions.push_back(k);
      if (matches[k].kind == MatchKind::Anaphor) anaphor = true;
    }
    if (first_cue) {
      if (!conditions.empty()) {
        for (std::size_t c : conditions) {
          out.push_back({*first_cue, c});
          paired.insert(c);
        }
      } else {
        std::vector<std::size_t> earlier;
        if (anaphor) {
          for (std::size_t k = 0; k < i; ++k) {
            if (matches[k].kind == MatchKind::Condition && !paired.count(k)) earlier.push_back(k);
          }
        }
        if (earlier.empty()) {
          out.push_back({*first_cue, npos});
        } else {
          for (std::size_t c : earlier) {
            out.push_back({*first_cue, c});
            paired.insert(c);
          }
        }
      }
    }
    i = j;
  }
  return out;
}

struct Analysis {
  std::vector<Token> tokens;
  std::vector<Match> matches;
};

Analysis analyze(std::string_view utterance, const CompiledLexicon& lex) {
  Analysis a;
  a.tokens = tokenize(utterance);
  a.matches = find_matches(a.tokens, lex);
  return a;
}

PopulationGroup resolve_from_matches(const std::vector<Match>& matches, const SessionContext& ctx) {
  for (const auto& m : matches) {
    if (m.kind == MatchKind::Alias) return static_cast<PopulationGroup>(m.value);
  }
  if (ctx.speaker_default_group) {
    for (const auto& m : matches) {
      if (m.kind == MatchKind::FirstPerson) return *ctx.speaker_default_group;
    }
  }
  if (ctx.last_mentioned_group) return *ctx.last_mentioned_group;
  if (ctx.speaker_default_group) return *ctx.speaker_default_group;
  return PopulationGroup::Other;
}

PopulationGroup resolve_mention(const std::vector<Match>& matches, std::size_t j,
                                const SessionContext& ctx) {
  const Match& m = matches[j];
  switch (m.kind) {
    case MatchKind::Alias:
      return static_cast<PopulationGroup>(m.value);
    case MatchKind::FirstPerson:
      return ctx.speaker_default_group.value_or(PopulationGroup::Other);
    case MatchKind::ThirdPerson:
      for (std::size_t k = j; k-- > 0;) {
        if (matches[k].kind == MatchKind::Alias) return static_cast<PopulationGroup>(matches[k].value);
      }
      return ctx.last_mentioned_group.value_or(PopulationGroup::Other);
    default:
      return PopulationGroup::Other;
  }
}

// Nearest preceding mention, else the nearest following one in the same
// clause, else the utterance-level subject.
PopulationGroup subject_of(const std::vector<Match>& matches, std::size_t idx,
                           const SessionContext& ctx) {
  for (std::size_t k = idx; k-- > 0;) {
    if (is_mention(matches[k].kind)) return resolve_mention(matches, k, ctx);
  }
  for (std::size_t k = idx + 1; k < matches.size() && matches[k].clause == matches[idx].clause; ++k) {
    if (is_mention(matches[k].kind)) return resolve_mention(matches, k, ctx);
  }
  return resolve_from_matches(matches, ctx);
}

const CompiledLexicon& compiled_for(const Lexicon& lexicon, std::optional<CompiledLexicon>& local) {
  if (&lexicon == &default_lexicon()) {
    static const CompiledLexicon compiled(default_lexicon());
    return compiled;
  }
  local.emplace(lexicon);
  return *local;
}

}  // namespace

// ---------------------------------------------------------------------------

void SessionContext::remember(std::string utterance) {
  ++utterance_count;
  utterance_history.push_back(std::move(utterance));
  while (utterance_history.size() > history_capacity) utterance_history.pop_front();
}

std::vector<std::string> tokenize_phrase(std::string_view phrase) {
  std::vector<std::string> out;
  for (auto& t : tokenize(phrase)) out.push_back(std::move(t.text));
  return out;
}

CompiledLexicon::CompiledLexicon(const Lexicon& lexicon) : source_(lexicon) {
  auto add = [&](const std::string& phrase, MatchKind kind, int value) {
    auto tokens = tokenize_phrase(phrase);
    if (tokens.empty()) return;
    auto& bucket = index_[tokens.front()];
    bucket.push_back(PhraseEntry{std::move(tokens), kind, value});
  };
  for (const auto& cue : lexicon.recovery_cues) add(cue, MatchKind::Cue, 0);
  for (const auto& [p, c] : lexicon.condition_triggers) add(p, MatchKind::Condition, static_cast<int>(c));
  for (const auto& [p, v] : lexicon.preference_triggers) add(p, MatchKind::Preference, static_cast<int>(v));
  for (const auto& [p, g] : lexicon.group_aliases) add(p, MatchKind::Alias, static_cast<int>(g));
  for (const auto& p : lexicon.first_person) add(p, MatchKind::FirstPerson, 0);
  for (const auto& p : lexicon.third_person) add(p, MatchKind::ThirdPerson, 0);
  for (const auto& p : lexicon.condition_anaphora) add(p, MatchKind::Anaphor, 0);

  // Longest first; on equal length the kind order above decides.
  for (auto& [first, bucket] : index_) {
    std::stable_sort(bucket.begin(), bucket.end(), [](const PhraseEntry& a, const PhraseEntry& b) {
      if (a.tokens.size() != b.tokens.size()) return a.tokens.size() > b.tokens.size();
      return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    });
  }
}

const std::vector<PhraseEntry>* CompiledLexicon::candidates(const std::string& first_token) const {
  auto it = index_.find(first_token);
  return it == index_.end() ? nullptr : &it->second;
}

std::vector<MemoryTagRecord> extract(std::string_view utterance, SessionContext& ctx,
                                     const CompiledLexicon& lexicon) {
  const Analysis a = analyze(utterance, lexicon);
  const auto& matches = a.matches;
  const auto pairings = pair_recovery(matches);
  const std::string source_id = fmt::format("utt-{}", ctx.utterance_count + 1);

  std::set<std::size_t> removed;
  std::set<std::size_t> remove_all_cues;
  for (const auto& p : pairings) {
    if (p.condition == npos) {
      remove_all_cues.insert(p.cue);
    } else {
      removed.insert(p.condition);
    }
  }

  std::vector<MemoryTagRecord> records;
  std::set<std::tuple<int, int, int, int>> seen;
  auto emit = [&](MemoryTagRecord r) {
    const auto key = std::make_tuple(static_cast<int>(r.group), static_cast<int>(r.action),
                                     r.condition ? static_cast<int>(*r.condition) : -1,
                                     r.preference ? static_cast<int>(*r.preference) : -1);
    if (!seen.insert(key).second) return;
    r.source_utterance_id = source_id;
    records.push_back(std::move(r));
  };

  for (std::size_t i = 0; i < matches.size(); ++i) {
    const Match& m = matches[i];
    switch (m.kind) {
      case MatchKind::Condition: {
        MemoryTagRecord r;
        r.group = subject_of(matches, i, ctx);
        r.condition = static_cast<HealthCondition>(m.value);
        r.action = removed.count(i) ? TagAction::RemoveCondition : TagAction::AddCondition;
        emit(std::move(r));
        break;
      }
      case MatchKind::Preference: {
        MemoryTagRecord r;
        r.group = subject_of(matches, i, ctx);
        r.preference = static_cast<ThermalPreference>(m.value);
        r.action = TagAction::SetPreference;
        emit(std::move(r));
        break;
      }
      case MatchKind::Cue:
        if (remove_all_cues.count(i)) {
          const PopulationGroup group = subject_of(matches, i, ctx);
          for (HealthCondition c : all_values<HealthCondition>()) {
            MemoryTagRecord r;
            r.group = group;
            r.condition = c;
            r.action = TagAction::RemoveCondition;
            emit(std::move(r));
          }
        }
        break;
      default:
        break;
    }
  }

  for (auto it = matches.rbegin(); it != matches.rend(); ++it) {
    if (it->kind == MatchKind::Alias) {
      ctx.last_mentioned_group = static_cast<PopulationGroup>(it->value);
      break;
    }
  }
  ctx.remember(std::string(utterance));
  return records;
}

std::vector<MemoryTagRecord> extract(std::string_view utterance, SessionContext& ctx,
                                     const Lexicon& lexicon) {
  std::optional<CompiledLexicon> local;
  return extract(utterance, ctx, compiled_for(lexicon, local));
}

std::vector<RecoveryFinding> detect_recovery(std::string_view utterance, const Lexicon& lexicon) {
  std::optional<CompiledLexicon> local;
  const Analysis a = analyze(utterance, compiled_for(lexicon, local));
  std::vector<RecoveryFinding> out;
  for (const auto& p : pair_recovery(a.matches)) {
    RecoveryFinding f;
    f.cue = a.matches[p.cue].span;
    if (p.condition != npos) {
      f.condition = static_cast<HealthCondition>(a.matches[p.condition].value);
      f.condition_span = a.matches[p.condition].span;
    }
    out.push_back(f);
  }
  return out;
}

PopulationGroup resolve_subject(std::string_view utterance, const SessionContext& ctx,
                                const Lexicon& lexicon) {
  std::optional<CompiledLexicon> local;
  const Analysis a = analyze(utterance, compiled_for(lexicon, local));
  return resolve_from_matches(a.matches, ctx);
}

}  // namespace airsteward::extract
