#include "airsteward/stream_parser.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include <fmt/format.h>

#include "airsteward/codec.hpp"

namespace airsteward::stream {

namespace {

constexpr std::array<std::string_view, 5> kHeaders{
    "(1) Environment & User-State Perception: ", "(2) Goal Setting: ",
    "(3) Quantitative-Target Determination: ", "(4) Strategy Formulation: ",
    "(5) Reasoning & Scheduling: "};

/// Length of the longest proper suffix of `text` that is a prefix of `s`.
std::size_t partial_suffix(std::string_view text, std::string_view s) {
  const std::size_t max = std::min(text.size(), s.size() - 1);
  for (std::size_t n = max; n > 0; --n) {
    if (text.substr(text.size() - n) == s.substr(0, n)) return n;
  }
  return 0;
}

/// Bytes at the end of `text` that start a UTF-8 sequence not yet complete.
std::size_t incomplete_utf8_tail(std::string_view text) {
  const std::size_t look = std::min<std::size_t>(3, text.size());
  for (std::size_t back = 1; back <= look; ++back) {
    const auto c = static_cast<unsigned char>(text[text.size() - back]);
    if ((c & 0xC0) == 0x80) continue;  // continuation byte
    std::size_t need = 1;
    if ((c & 0xE0) == 0xC0) {
      need = 2;
    } else if ((c & 0xF0) == 0xE0) {
      need = 3;
    } else if ((c & 0xF8) == 0xF0) {
      need = 4;
    }
    return need > back ? back : 0;
  }
  return 0;
}

}  // namespace

void SegmentationConfig::validate() const {
  const std::array<const std::string*, 4> all{&reasoning_open, &reasoning_close, &command_open,
                                              &command_close};
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i]->empty()) throw std::invalid_argument("sentinels must be non-empty");
    for (std::size_t k = 0; k < all.size(); ++k) {
      if (i != k && all[k]->find(*all[i]) != std::string::npos) {
        throw std::invalid_argument(
            fmt::format("sentinel '{}' overlaps sentinel '{}'", *all[i], *all[k]));
      }
    }
  }
}

std::size_t SegmentationConfig::max_sentinel() const {
  return std::max({reasoning_open.size(), reasoning_close.size(), command_open.size(),
                   command_close.size()});
}

StreamParser::StreamParser(SegmentationConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::vector<StreamEvent> StreamParser::feed(std::string_view chunk) {
  std::vector<StreamEvent> out;
  if (state_ == State::Finished) {
    out.push_back(ParseError{"data after end of stream", base_ + pending_.size()});
    return out;
  }
  pending_.append(chunk);
  process(out, false);
  return out;
}

std::vector<StreamEvent> StreamParser::finish() {
  std::vector<StreamEvent> out;
  if (state_ == State::Finished) return out;
  process(out, true);
  switch (state_) {
    case State::Reasoning:
      out.push_back(ParseError{"unterminated reasoning region", region_start_});
      break;
    case State::Command:
      out.push_back(ParseError{"unterminated command", region_start_});
      break;
    default:
      break;
  }
  close_stray(out);
  base_ += pending_.size();
  pending_.clear();
  state_ = State::Finished;
  return out;
}

void StreamParser::consume(std::size_t n) {
  pending_.erase(0, n);
  base_ += n;
}

void StreamParser::extend_stray(std::size_t begin, std::size_t len) {
  if (len == 0) return;
  if (!stray_start_) stray_start_ = begin;
  if (stray_text_.size() < 32) stray_text_.append(pending_, begin - base_, std::min<std::size_t>(len, 32));
}

void StreamParser::close_stray(std::vector<StreamEvent>& out) {
  if (!stray_start_) return;
  const std::string excerpt = stray_text_.substr(0, 32);
  if (cfg_.strict) {
    out.push_back(ParseError{fmt::format("text outside any region: '{}'", excerpt), *stray_start_});
  } else {
    diagnostics_.push_back(fmt::format("byte {}: discarded text '{}'", *stray_start_, excerpt));
  }
  stray_start_.reset();
  stray_text_.clear();
}

void StreamParser::process(std::vector<StreamEvent>& out, bool final) {
  for (;;) {
    const State before = state_;
    const std::size_t size_before = pending_.size();
    switch (state_) {
      case State::Before:
      case State::Between:
      case State::Done:
        scan_outside(out, final);
        break;
      case State::Reasoning:
        scan_reasoning(out, final);
        break;
      case State::Command:
        scan_command(out);
        break;
      case State::Finished:
        return;
    }
    if (state_ == before && pending_.size() == size_before) return;
  }
}

void StreamParser::scan_outside(std::vector<StreamEvent>& out, bool final) {
  const std::array<const std::string*, 4> sentinels{&cfg_.reasoning_open, &cfg_.reasoning_close,
                                                    &cfg_.command_open, &cfg_.command_close};
  std::size_t best = std::string::npos;
  std::size_t which = 0;
  for (std::size_t i = 0; i < sentinels.size(); ++i) {
    const auto pos = pending_.find(*sentinels[i]);
    if (pos < best) {
      best = pos;
      which = i;
    }
  }

  if (best == std::string::npos) {
    std::size_t hold = 0;
    if (!final) {
      for (const auto* s : sentinels) hold = std::max(hold, partial_suffix(pending_, *s));
    }
    const std::size_t n = pending_.size() - hold;
    extend_stray(base_, n);
    consume(n);
    return;
  }

  extend_stray(base_, best);
  close_stray(out);
  const std::size_t at = base_ + best;
  const std::size_t len = sentinels[which]->size();
  consume(best + len);

  if (which == 0 && state_ == State::Before) {
    state_ = State::Reasoning;
    reasoning_seen_ = true;
    region_start_ = at;
  } else if (which == 2 && (state_ == State::Before || state_ == State::Between)) {
    state_ = State::Command;
    region_start_ = at;
    command_scan_ = 0;
  } else {
    std::string why;
    if (state_ == State::Done) {
      why = "only one reasoning region and one command are allowed";
    } else if (which == 0) {
      why = "reasoning must come before the command";
    } else {
      why = "closing sentinel without an open region";
    }
    out.push_back(ParseError{fmt::format("unexpected {}: {}", *sentinels[which], why), at});
  }
}

void StreamParser::scan_reasoning(std::vector<StreamEvent>& out, bool final) {
  const auto pos = pending_.find(cfg_.reasoning_close);
  if (pos != std::string::npos) {
    if (pos > 0) out.push_back(ReasoningDelta{pending_.substr(0, pos)});
    out.push_back(ReasoningDone{});
    consume(pos + cfg_.reasoning_close.size());
    state_ = State::Between;
    return;
  }
  std::size_t n = pending_.size();
  if (!final) {
    n -= partial_suffix(pending_, cfg_.reasoning_close);
    n -= incomplete_utf8_tail(std::string_view(pending_).substr(0, n));
  }
  if (n == 0) return;
  out.push_back(ReasoningDelta{pending_.substr(0, n)});
  consume(n);
}

void StreamParser::scan_command(std::vector<StreamEvent>& out) {
  const std::size_t from =
      command_scan_ >= cfg_.command_close.size() ? command_scan_ - cfg_.command_close.size() + 1 : 0;
  const auto pos = pending_.find(cfg_.command_close, from);
  if (pos == std::string::npos) {
    command_scan_ = pending_.size();
    return;
  }
  const std::size_t body_start = base_;
  const std::string_view body(pending_.data(), pos);
  try {
    out.push_back(CommandReady{decode_plan(body)});
  } catch (const DecodeError& e) {
    out.push_back(ParseError{fmt::format("malformed command: {}", e.what()), body_start + e.offset()});
  } catch (const SchemaError& e) {
    out.push_back(ParseError{fmt::format("invalid command: {}", e.what()), body_start});
  }
  consume(pos + cfg_.command_close.size());
  command_scan_ = 0;
  state_ = State::Done;
}

// ---------------------------------------------------------------------------

std::vector<StreamEvent> parse_whole(std::string_view text, const SegmentationConfig& cfg) {
  StreamParser parser(cfg);
  auto events = parser.feed(text);
  auto tail = parser.finish();
  events.insert(events.end(), tail.begin(), tail.end());
  return events;
}

std::vector<StreamEvent> coalesce(const std::vector<StreamEvent>& events) {
  std::vector<StreamEvent> out;
  for (const auto& e : events) {
    if (const auto* d = std::get_if<ReasoningDelta>(&e); d && !out.empty()) {
      if (auto* prev = std::get_if<ReasoningDelta>(&out.back())) {
        prev->text += d->text;
        continue;
      }
    }
    out.push_back(e);
  }
  return out;
}

std::string render_chain(const ReasoningChain& chain) {
  const std::array<const std::string*, 5> parts{&chain.perception, &chain.goals,
                                                &chain.quantitative_targets, &chain.strategy,
                                                &chain.scheduling};
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += '\n';
    out += kHeaders[i];
    out += *parts[i];
  }
  return out;
}

ReasoningChain parse_chain(std::string_view text) {
  std::array<std::string, 5> parts;
  if (text.substr(0, kHeaders[0].size()) != kHeaders[0]) {
    throw SchemaError("reasoning does not start with step (1)", "perception");
  }
  std::size_t start = kHeaders[0].size();
  static constexpr std::array<std::string_view, 5> kFields{"perception", "goals", "quantitative_targets",
                                                           "strategy", "scheduling"};
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i + 1 == parts.size()) {
      parts[i] = std::string(text.substr(start));
      break;
    }
    const std::string marker = "\n" + std::string(kHeaders[i + 1]);
    const auto pos = text.find(marker, start);
    if (pos == std::string_view::npos) {
      throw SchemaError(fmt::format("missing step ({}) header", i + 2), std::string(kFields[i + 1]));
    }
    parts[i] = std::string(text.substr(start, pos - start));
    start = pos + marker.size();
  }
  return ReasoningChain{parts[0], parts[1], parts[2], parts[3], parts[4]};
}

std::string render(const ReasoningChain& chain, const ControlPlan& plan, const SegmentationConfig& cfg) {
  return cfg.reasoning_open + render_chain(chain) + cfg.reasoning_close + cfg.command_open +
         encode_plan(plan) + cfg.command_close;
}

}  // namespace airsteward::stream
