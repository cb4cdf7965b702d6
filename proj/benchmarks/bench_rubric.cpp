#include <benchmark/benchmark.h>

#include "airsteward/corpus.hpp"
#include "airsteward/rubric.hpp"
#include "generators.hpp"

using namespace airsteward;

static void BM_ScoreCase(benchmark::State& state) {
  testkit::Rng rng(3);
  const auto& kb = planner::default_knowledge_base();
  const auto s = testkit::random_scenario(rng);
  const auto c = eval::make_case("b", s, kb);
  const auto ctx = eval::make_context(s, kb);
  const eval::Candidate cand{c.truth.plan, c.truth.chain, {}};
  for (auto _ : state) benchmark::DoNotOptimize(eval::score_case(ctx, cand, c.truth));
}
BENCHMARK(BM_ScoreCase);

static void BM_RunCorpus(benchmark::State& state) {
  testkit::Rng rng(4);
  const auto& kb = planner::default_knowledge_base();
  std::vector<eval::CorpusCase> cases;
  for (int i = 0; i < 200; ++i) cases.push_back(eval::make_case(std::to_string(i), testkit::random_scenario(rng, i), kb));
  const eval::PlannerSource source(kb);
  for (auto _ : state) benchmark::DoNotOptimize(eval::run_corpus(cases, source, kb, {}, 1));
}
BENCHMARK(BM_RunCorpus)->Unit(benchmark::kMillisecond);
