#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "airsteward/codec.hpp"
#include "airsteward/stream_parser.hpp"
#include "generators.hpp"

using namespace airsteward;
using namespace airsteward::stream;
using airsteward::testkit::Rng;

namespace {

const SegmentationConfig kShort{"<R>", "</R>", "<C>", "</C>", true};

std::vector<StreamEvent> feed_chunks(std::string_view text, const std::vector<std::size_t>& cuts,
                                     const SegmentationConfig& cfg, std::size_t* max_held = nullptr) {
  StreamParser p(cfg);
  std::vector<StreamEvent> out;
  std::size_t prev = 0;
  auto take = [&](std::vector<StreamEvent> ev) { out.insert(out.end(), ev.begin(), ev.end()); };
  for (std::size_t cut : cuts) {
    take(p.feed(text.substr(prev, cut - prev)));
    if (max_held) *max_held = std::max(*max_held, p.held_bytes());
    prev = cut;
  }
  take(p.feed(text.substr(prev)));
  if (max_held) *max_held = std::max(*max_held, p.held_bytes());
  take(p.finish());
  return out;
}

std::vector<std::size_t> random_cuts(Rng& rng, std::size_t size) {
  std::vector<std::size_t> cuts;
  if (size < 2) return cuts;
  for (int k = testkit::uniform_int(rng, 0, 12); k > 0; --k) {
    cuts.push_back(static_cast<std::size_t>(testkit::uniform_int(rng, 1, static_cast<int>(size) - 1)));
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

std::vector<std::size_t> every_byte(std::size_t size) {
  std::vector<std::size_t> cuts;
  for (std::size_t i = 1; i < size; ++i) cuts.push_back(i);
  return cuts;
}

/// Rendered streams, some damaged so the error paths are covered too.
std::string random_stream(Rng& rng, const SegmentationConfig& cfg) {
  std::string s = render(testkit::random_chain(rng), testkit::random_plan(rng), cfg);
  switch (testkit::uniform_int(rng, 0, 6)) {
    case 0:
      s.resize(static_cast<std::size_t>(testkit::uniform_int(rng, 0, static_cast<int>(s.size()))));
      break;
    case 1:
      s.insert(static_cast<std::size_t>(testkit::uniform_int(rng, 0, static_cast<int>(s.size()))),
               testkit::random_text(rng, 3));
      break;
    case 2: {
      const std::vector<std::string> bits{cfg.reasoning_open, cfg.reasoning_close, cfg.command_open,
                                          cfg.command_close, "<", "</", "{]", "\xe6\xb8", "\xf0\x9f"};
      s.insert(static_cast<std::size_t>(testkit::uniform_int(rng, 0, static_cast<int>(s.size()))),
               testkit::pick_from(rng, bits));
      break;
    }
    default:
      break;
  }
  return s;
}

std::string deltas(const std::vector<StreamEvent>& ev) {
  std::string out;
  for (const auto& e : ev)
    if (const auto* d = std::get_if<ReasoningDelta>(&e)) out += d->text;
  return out;
}

}  // namespace

TEST(Feed, WholeStringExample) {
  Rng rng(1);
  const auto plan = testkit::random_plan(rng);
  const std::string text = "<R>hot</R><C>" + encode_plan(plan) + "</C>";
  const auto ev = parse_whole(text, kShort);
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_EQ(ev[0], StreamEvent(ReasoningDelta{"hot"}));
  EXPECT_EQ(ev[1], StreamEvent(ReasoningDone{}));
  EXPECT_EQ(ev[2], StreamEvent(CommandReady{plan}));
}

TEST(Feed, EveryTwoChunkSplitMatchesWholeParse) {
  Rng rng(2);
  const std::string text = "<R>hot</R><C>" + encode_plan(testkit::random_plan(rng)) + "</C>";
  const auto whole = coalesce(parse_whole(text, kShort));
  for (std::size_t cut = 0; cut <= text.size(); ++cut) {
    EXPECT_EQ(coalesce(feed_chunks(text, {cut}, kShort)), whole) << cut;
  }
}

TEST(Feed, MalformedCommandReportsOffset) {
  const std::string text = "<R>x</R><C>{]</C>";
  const auto ev = parse_whole(text, kShort);
  ASSERT_EQ(ev.size(), 3u);
  const auto* err = std::get_if<ParseError>(&ev[2]);
  ASSERT_NE(err, nullptr);
  EXPECT_EQ(err->offset, text.find("{]") + 1);
}

TEST(Feed, SchemaInvalidCommand) {
  const auto ev = parse_whole("<R>x</R><C>{}</C>", kShort);
  ASSERT_EQ(ev.size(), 3u);
  const auto* err = std::get_if<ParseError>(&ev[2]);
  ASSERT_NE(err, nullptr);
  EXPECT_THAT(err->message, ::testing::HasSubstr("invalid command"));
}

TEST(Feed, StrayTextStrictAndLenient) {
  Rng rng(3);
  const std::string text = "<R>a</R> oops <C>" + encode_plan(testkit::random_plan(rng)) + "</C>";
  const auto strict = parse_whole(text, kShort);
  const auto* err = std::get_if<ParseError>(&strict[2]);
  ASSERT_NE(err, nullptr);
  EXPECT_EQ(err->offset, 8u);

  auto lenient_cfg = kShort;
  lenient_cfg.strict = false;
  StreamParser lenient(lenient_cfg);
  auto ev = lenient.feed(text);
  auto tail = lenient.finish();
  ev.insert(ev.end(), tail.begin(), tail.end());
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_TRUE(std::holds_alternative<CommandReady>(ev[2]));
  ASSERT_EQ(lenient.diagnostics().size(), 1u);
  EXPECT_THAT(lenient.diagnostics()[0], ::testing::HasSubstr("oops"));
}

TEST(Feed, SecondCommandIsAnError) {
  Rng rng(4);
  const std::string cmd = "<C>" + encode_plan(testkit::random_plan(rng)) + "</C>";
  const auto ev = parse_whole("<R>a</R>" + cmd + cmd, kShort);
  int ready = 0;
  for (const auto& e : ev) ready += std::holds_alternative<CommandReady>(e);
  EXPECT_EQ(ready, 1);
  EXPECT_TRUE(std::holds_alternative<ParseError>(ev.back()));
}

TEST(Finish, AfterCompleteStreamIsEmpty) {
  Rng rng(5);
  StreamParser p(kShort);
  p.feed("<R>a</R><C>" + encode_plan(testkit::random_plan(rng)) + "</C>");
  EXPECT_TRUE(p.finish().empty());
  EXPECT_TRUE(p.finish().empty());
  const auto late = p.feed("x");
  ASSERT_EQ(late.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<ParseError>(late[0]));
}

TEST(Finish, MidCommandIsUnterminated) {
  StreamParser p(kShort);
  p.feed("<R>a</R><C>{\"cmd\":");
  const auto ev = p.finish();
  ASSERT_EQ(ev.size(), 1u);
  const auto& err = std::get<ParseError>(ev[0]);
  EXPECT_EQ(err.message, "unterminated command");
  EXPECT_EQ(err.offset, 8u);
}

TEST(Finish, FlushesHeldSentinelPrefix) {
  const std::string truncated = "<REASONING>abc</REAS";
  StreamParser p;
  auto ev = p.feed(truncated);
  EXPECT_EQ(deltas(ev), "abc");
  EXPECT_EQ(p.held_bytes(), 6u);
  const auto tail = p.finish();
  ASSERT_EQ(tail.size(), 2u);
  EXPECT_EQ(tail[0], StreamEvent(ReasoningDelta{"</REAS"}));
  EXPECT_EQ(std::get<ParseError>(tail[1]).message, "unterminated reasoning region");

  SegmentationConfig lenient;
  lenient.strict = false;
  ev.insert(ev.end(), tail.begin(), tail.end());
  EXPECT_EQ(coalesce(ev), coalesce(parse_whole(truncated, lenient)));
  EXPECT_EQ(deltas(ev), "abc</REAS");
}

TEST(Feed, MultibyteCharactersNeverSplitInDeltas) {
  const std::string text = "<REASONING>温度 😀 µg/m³</REASONING>";
  const auto ev = feed_chunks(text, every_byte(text.size()), {});
  for (const auto& e : ev) {
    if (const auto* d = std::get_if<ReasoningDelta>(&e)) {
      const auto first = static_cast<unsigned char>(d->text.front());
      EXPECT_NE(first & 0xC0u, 0x80u) << "delta starts mid-character";
    }
  }
  EXPECT_EQ(deltas(ev), "温度 😀 µg/m³");
}

TEST(Properties, ChunkingInvariance) {
  Rng rng(6);
  for (const auto& cfg : {SegmentationConfig{}, kShort}) {
    for (int i = 0; i < 400; ++i) {
      const std::string text = random_stream(rng, cfg);
      const auto whole = coalesce(parse_whole(text, cfg));
      std::size_t held = 0;
      EXPECT_EQ(coalesce(feed_chunks(text, random_cuts(rng, text.size()), cfg, &held)), whole) << text;
      EXPECT_LE(held, cfg.max_sentinel() + 3);
      if (i % 20 == 0) EXPECT_EQ(coalesce(feed_chunks(text, every_byte(text.size()), cfg)), whole) << text;
    }
  }
}

TEST(Properties, ReadyFollowsDone) {
  Rng rng(7);
  for (int i = 0; i < 300; ++i) {
    const auto ev = parse_whole(random_stream(rng, {}));
    int ready = 0;
    bool done = false;
    for (const auto& e : ev) {
      if (std::holds_alternative<ReasoningDone>(e)) done = true;
      if (std::holds_alternative<ReasoningDelta>(e)) EXPECT_FALSE(done);
      if (std::holds_alternative<CommandReady>(e)) {
        ++ready;
        EXPECT_TRUE(done);
      }
    }
    EXPECT_LE(ready, 1);
  }
}

TEST(Render, RoundTrip) {
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto chain = testkit::random_chain(rng);
    const auto plan = testkit::random_plan(rng);
    const auto text = render(chain, plan);
    const auto ev = coalesce(parse_whole(text));
    ASSERT_EQ(ev.size(), 3u) << text;
    EXPECT_EQ(parse_chain(std::get<ReasoningDelta>(ev[0]).text), chain);
    EXPECT_EQ(std::get<CommandReady>(ev[2]).plan, plan);
    if (i % 50 == 0) EXPECT_EQ(coalesce(feed_chunks(text, every_byte(text.size()), {})), ev);
  }
}

TEST(Render, EmptySegments) {
  Rng rng(9);
  const ReasoningChain empty;
  const auto text = render_chain(empty);
  EXPECT_THAT(text, ::testing::HasSubstr("(1) Environment & User-State Perception:"));
  EXPECT_THAT(text, ::testing::HasSubstr("(5) Reasoning & Scheduling:"));
  EXPECT_EQ(parse_chain(text), empty);
  const auto plan = testkit::random_plan(rng);
  const auto ev = coalesce(parse_whole(render(empty, plan)));
  EXPECT_EQ(parse_chain(std::get<ReasoningDelta>(ev[0]).text), empty);
}

TEST(Render, ParseChainNeedsHeaders) { EXPECT_THROW(parse_chain("just text"), SchemaError); }

TEST(Config, Validation) {
  EXPECT_NO_THROW(SegmentationConfig{}.validate());
  EXPECT_THROW((SegmentationConfig{"", "</R>", "<C>", "</C>", true}.validate()), std::invalid_argument);
  EXPECT_THROW((SegmentationConfig{"<R>", "<R>", "<C>", "</C>", true}.validate()), std::invalid_argument);
  EXPECT_THROW((SegmentationConfig{"<C", "</R>", "<C>", "</C>", true}.validate()), std::invalid_argument);
  EXPECT_THROW(StreamParser(SegmentationConfig{"x", "x", "y", "z", true}), std::invalid_argument);
}
