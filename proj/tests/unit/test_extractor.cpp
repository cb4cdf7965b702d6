#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "airsteward/backend.hpp"
#include "airsteward/codec.hpp"
#include "airsteward/extractor.hpp"
#include "generators.hpp"

using namespace airsteward;
using namespace airsteward::extract;
using airsteward::testkit::Rng;

namespace {

MemoryTagRecord rec(PopulationGroup g, TagAction a, std::optional<HealthCondition> c = {},
                    std::optional<ThermalPreference> p = {}) {
  MemoryTagRecord r;
  r.group = g;
  r.action = a;
  r.condition = c;
  r.preference = p;
  return r;
}

std::vector<MemoryTagRecord> strip_ids(std::vector<MemoryTagRecord> v) {
  for (auto& r : v) r.source_utterance_id.clear();
  return v;
}

std::vector<MemoryTagRecord> run(std::string_view text, std::optional<PopulationGroup> speaker = {}) {
  SessionContext ctx;
  ctx.speaker_default_group = speaker;
  return strip_ids(extract::extract(text, ctx));
}

class FakeAdapter : public BackendAdapter {
 public:
  enum class Mode { Valid, Malformed, Timeout, Invalid };
  explicit FakeAdapter(Mode m) : mode_(m) {}
  void submit(const std::string& prompt, const ChunkSink& sink) override {
    last_prompt = prompt;
    switch (mode_) {
      case Mode::Valid:
        sink("Here you go: [{\"group\": \"child\", \"action\": \"add_condition\",");
        sink(" \"condition\": \"rhinitis\"}]");
        break;
      case Mode::Malformed:
        sink("[{\"group\": \"child\", ");
        break;
      case Mode::Invalid:
        sink("[{\"group\": \"child\", \"action\": \"add_condition\"}]");
        break;
      case Mode::Timeout:
        throw BackendError(BackendError::Kind::Timeout, "timed out");
    }
  }
  std::string last_prompt;

 private:
  Mode mode_;
};

}  // namespace

TEST(Extract, GrandmaAsthmaClearedUp) {
  EXPECT_EQ(run("Grandma's asthma has cleared up"),
            std::vector{rec(PopulationGroup::Elderly, TagAction::RemoveCondition, HealthCondition::Asthma)});
}

TEST(Extract, EmptyAndGibberishYieldNothing) {
  EXPECT_TRUE(run("").empty());
  EXPECT_TRUE(run("qwv zzk 1234 ???").empty());
}

TEST(Extract, SonFeverAndSpeakerPreference) {
  const auto out = run("My son has a fever and I'm feeling quite cold lately", PopulationGroup::AdultFemale);
  EXPECT_EQ(out, (std::vector{rec(PopulationGroup::Child, TagAction::AddCondition, HealthCondition::Fever),
                              rec(PopulationGroup::AdultFemale, TagAction::SetPreference, std::nullopt,
                                  ThermalPreference::SlightlyColdSensitive)}));
}

TEST(Extract, HyphenatedPreferenceDoesNotTriggerCold) {
  const auto out = run("grandpa is cold-sensitive");
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].action, TagAction::SetPreference);
  EXPECT_EQ(out[0].preference, ThermalPreference::SlightlyColdSensitive);
}

TEST(Extract, CaseInsensitive) { EXPECT_EQ(run("GRANDMA HAS ASTHMA"), run("grandma has asthma")); }

TEST(Extract, SourceIdsFollowUtteranceCount) {
  SessionContext ctx;
  extract::extract("hello", ctx);
  const auto out = extract::extract("dad has a cough", ctx);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].source_utterance_id, "utt-2");
}

TEST(Extract, HistoryIsBounded) {
  SessionContext ctx;
  for (int i = 0; i < 40; ++i) extract::extract(fmt::format("utterance {}", i), ctx);
  EXPECT_EQ(ctx.utterance_history.size(), SessionContext::kDefaultHistory);
  EXPECT_EQ(ctx.utterance_history.back(), "utterance 39");
  EXPECT_EQ(ctx.utterance_count, 40u);
}

TEST(Extract, EveryRecordValidates) {
  Rng rng(5);
  const auto& lex = default_lexicon();
  std::vector<std::string> phrases;
  for (const auto& [p, _] : lex.group_aliases) phrases.push_back(p);
  for (const auto& [p, _] : lex.condition_triggers) phrases.push_back(p);
  for (const auto& [p, _] : lex.preference_triggers) phrases.push_back(p);
  for (const auto& p : lex.recovery_cues) phrases.push_back(p);
  for (int i = 0; i < 500; ++i) {
    std::string u;
    for (int k = testkit::uniform_int(rng, 1, 6); k > 0; --k) u += testkit::pick_from(rng, phrases) + " ";
    SessionContext ctx;
    for (const auto& r : extract::extract(u, ctx)) EXPECT_TRUE(validate_record(r).ok()) << u;
  }
}

TEST(Recovery, CueWithConditionInClause) {
  const auto f = detect_recovery("my cough is all good now");
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].condition, HealthCondition::Cough);
  EXPECT_EQ(run("my cough is all good now", PopulationGroup::AdultMale),
            std::vector{rec(PopulationGroup::AdultMale, TagAction::RemoveCondition, HealthCondition::Cough)});
}

TEST(Recovery, NoCueNoFinding) { EXPECT_TRUE(detect_recovery("I have a cough").empty()); }

TEST(Recovery, BareCueRemovesEverything) {
  const auto f = detect_recovery("Grandpa has recovered");
  ASSERT_EQ(f.size(), 1u);
  EXPECT_FALSE(f[0].condition.has_value());
  const auto out = run("Grandpa has recovered");
  ASSERT_EQ(out.size(), enum_count<HealthCondition>);
  for (const auto& r : out) {
    EXPECT_EQ(r.group, PopulationGroup::Elderly);
    EXPECT_EQ(r.action, TagAction::RemoveCondition);
  }
}

TEST(Recovery, CueDoesNotReachIntoAnotherClause) {
  const auto out = run("grandma has a cough. grandpa has recovered");
  EXPECT_EQ(out.front(), rec(PopulationGroup::Elderly, TagAction::AddCondition, HealthCondition::Cough));
}

TEST(Recovery, SpansPointAtText) {
  const std::string u = "my cough is all good now";
  const auto f = detect_recovery(u);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(u.substr(f[0].cue.begin, f[0].cue.end - f[0].cue.begin), "all good now");
  EXPECT_EQ(u.substr(f[0].condition_span->begin, f[0].condition_span->end - f[0].condition_span->begin), "cough");
}

TEST(Subject, PriorityOrder) {
  SessionContext empty;
  EXPECT_EQ(resolve_subject("grandma is cold", empty), PopulationGroup::Elderly);
  EXPECT_EQ(resolve_subject("it is cold", empty), PopulationGroup::Other);

  SessionContext ctx;
  extract::extract("grandma has a cold", ctx);
  EXPECT_EQ(resolve_subject("she's feeling better", ctx), PopulationGroup::Elderly);
  ctx.speaker_default_group = PopulationGroup::AdultMale;
  EXPECT_EQ(resolve_subject("she's feeling better", ctx), PopulationGroup::Elderly);
  EXPECT_EQ(resolve_subject("my son is chilly", ctx), PopulationGroup::Child);

  SessionContext speaker_only;
  speaker_only.speaker_default_group = PopulationGroup::AdultFemale;
  EXPECT_EQ(resolve_subject("feeling better today", speaker_only), PopulationGroup::AdultFemale);
}

TEST(Subject, PronounFollowsEarlierUtterance) {
  SessionContext ctx;
  extract::extract("grandma has a cold", ctx);
  const auto out = strip_ids(extract::extract("she's feeling better", ctx));
  ASSERT_FALSE(out.empty());
  for (const auto& r : out) EXPECT_EQ(r.group, PopulationGroup::Elderly);
}

TEST(Recovery, ClosureOnGeneratedUtterances) {
  Rng rng(11);
  int adds = 0;
  for (int i = 0; i < 500; ++i) {
    const auto u = testkit::random_utterance(rng);
    const auto speaker = testkit::coin(rng) ? std::optional(testkit::pick<PopulationGroup>(rng)) : std::nullopt;
    const auto before = run(u, speaker);
    const auto after = run(u + ", but it's all good now", speaker);
    for (const auto& r : before) {
      if (r.action != TagAction::AddCondition) continue;
      ++adds;
      MemoryTagRecord removal = r;
      removal.action = TagAction::RemoveCondition;
      EXPECT_NE(std::find(after.begin(), after.end(), removal), after.end()) << u;
    }
  }
  EXPECT_GT(adds, 300);
}

TEST(Golden, ShippedCorpus) {
  const auto text = testkit::read_file(testkit::source_path("tests/data/extraction_golden.jsonl"));
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = parse_json(line);
    SessionContext ctx;
    if (j.contains("speaker")) ctx.speaker_default_group = enum_from_string<PopulationGroup>(j["speaker"].get<std::string>());
    if (j.contains("history")) {
      for (const auto& h : j["history"]) extract::extract(h.get<std::string>(), ctx);
    }
    std::vector<MemoryTagRecord> expected;
    for (const auto& e : j["expected"]) expected.push_back(record_from_json(e));
    EXPECT_EQ(strip_ids(extract::extract(j["utterance"].get<std::string>(), ctx)), expected) << j["id"];
    ++n;
  }
  EXPECT_EQ(n, 50);
}

TEST(Lexicon, EveryTagValueReachable) {
  const auto& lex = default_lexicon();
  for (auto g : all_values<PopulationGroup>()) {
    bool found = false;
    for (const auto& [phrase, value] : lex.group_aliases) {
      if (value != g) continue;
      found = true;
      EXPECT_EQ(resolve_subject(phrase + " has a cough", SessionContext{}), g) << phrase;
      break;
    }
    EXPECT_TRUE(found) << to_string(g);
  }
  for (auto c : all_values<HealthCondition>()) {
    bool found = false;
    for (const auto& [phrase, value] : lex.condition_triggers) {
      if (value != c) continue;
      const auto out = run("grandpa has " + phrase);
      if (out.size() == 1 && out[0].condition == c) found = true;
    }
    EXPECT_TRUE(found) << to_string(c);
  }
  for (auto p : all_values<ThermalPreference>()) {
    bool found = false;
    for (const auto& [phrase, value] : lex.preference_triggers) {
      if (value != p) continue;
      const auto out = run("grandpa " + phrase);
      if (out.size() == 1 && out[0].preference == p) found = true;
    }
    EXPECT_TRUE(found) << to_string(p);
  }
  for (const char* cue : {"recovered", "healed", "fully recovered", "back to normal", "all clear"}) {
    EXPECT_NE(std::find(lex.recovery_cues.begin(), lex.recovery_cues.end(), cue), lex.recovery_cues.end()) << cue;
    EXPECT_EQ(detect_recovery(std::string("grandpa is ") + cue).size(), 1u) << cue;
  }
}

TEST(Lexicon, JsonRoundTripAndValidation) {
  const auto& lex = default_lexicon();
  EXPECT_EQ(lexicon_from_json(to_json(lex)), lex);
  auto j = to_json(lex);
  j["recovery_cues"] = nlohmann::json::array();
  EXPECT_THROW(lexicon_from_json(j), SchemaError);
  j = to_json(lex);
  j["group_aliases"]["robot"] = "android";
  EXPECT_THROW(lexicon_from_json(j), SchemaError);
}

TEST(Lexicon, CustomLexiconIsUsed) {
  Lexicon lex = default_lexicon();
  lex.group_aliases["oma"] = PopulationGroup::Elderly;
  lex.condition_triggers["husten"] = HealthCondition::Cough;
  SessionContext ctx;
  const auto out = strip_ids(extract::extract("oma hat husten", ctx, lex));
  EXPECT_EQ(out, std::vector{rec(PopulationGroup::Elderly, TagAction::AddCondition, HealthCondition::Cough)});
}

TEST(Backend, ValidResponsePassesThrough) {
  FakeAdapter a(FakeAdapter::Mode::Valid);
  SessionContext ctx;
  const auto r = extract_via_backend("the kids sneeze a lot", ctx, &a);
  EXPECT_EQ(r.provenance, Provenance::Backend);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].condition, HealthCondition::Rhinitis);
  EXPECT_EQ(r.records[0].source_utterance_id, "utt-1");
  EXPECT_THAT(a.last_prompt, ::testing::HasSubstr("the kids sneeze a lot"));
  EXPECT_EQ(ctx.last_mentioned_group, PopulationGroup::Child);
}

TEST(Backend, MalformedTimeoutAndInvalidFallBack) {
  for (auto mode : {FakeAdapter::Mode::Malformed, FakeAdapter::Mode::Timeout, FakeAdapter::Mode::Invalid}) {
    FakeAdapter a(mode);
    SessionContext ctx;
    const auto r = extract_via_backend("grandma has asthma", ctx, &a);
    EXPECT_EQ(r.provenance, Provenance::Fallback);
    EXPECT_FALSE(r.diagnostic.empty());
    EXPECT_EQ(strip_ids(r.records), run("grandma has asthma"));
  }
}

TEST(Backend, NoAdapterMeansLexicon) {
  SessionContext ctx;
  const auto r = extract_via_backend("grandma has asthma", ctx, nullptr);
  EXPECT_EQ(r.provenance, Provenance::Lexicon);
  EXPECT_EQ(r.records.size(), 1u);
}

TEST(Backend, HttpAdapterStreamsAndTimesOut) {
  httplib::Server server;
  server.Post("/generate", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    if (body["prompt"].get<std::string>().find("slow") != std::string::npos) {
      std::this_thread::sleep_for(std::chrono::milliseconds(600));
    }
    res.set_content(R"([{"group": "elderly", "action": "add_condition", "condition": "cough"}])", "text/plain");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  BackendConfig cfg;
  cfg.url = fmt::format("http://127.0.0.1:{}/generate", port);
  cfg.timeout = std::chrono::milliseconds(200);
  cfg.retries = 0;
  HttpBackendAdapter adapter(cfg);
  SessionContext ctx;
  const auto ok = extract_via_backend("grandma coughs", ctx, &adapter);
  EXPECT_EQ(ok.provenance, Provenance::Backend);
  ASSERT_EQ(ok.records.size(), 1u);
  EXPECT_EQ(ok.records[0].condition, HealthCondition::Cough);

  const auto slow = extract_via_backend("slow: grandma has asthma", ctx, &adapter);
  EXPECT_EQ(slow.provenance, Provenance::Fallback);
  EXPECT_EQ(slow.records.size(), 1u);

  cfg.url = "http://127.0.0.1:1/generate";
  HttpBackendAdapter dead(cfg);
  EXPECT_THROW(dead.submit("x", [](std::string_view) {}), BackendError);

  server.stop();
  t.join();
}
