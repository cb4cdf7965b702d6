#include <benchmark/benchmark.h>

#include "airsteward/planner.hpp"
#include "generators.hpp"

using namespace airsteward;

static void BM_PlanNominal(benchmark::State& state) {
  const auto s = planner::load_scenario(testkit::source_path("scenarios/nominal.json"));
  const auto& kb = planner::default_knowledge_base();
  for (auto _ : state) benchmark::DoNotOptimize(planner::plan(s, kb));
}
BENCHMARK(BM_PlanNominal);

static void BM_PlanRandom(benchmark::State& state) {
  testkit::Rng rng(1);
  std::vector<planner::Scenario> scenarios;
  for (int i = 0; i < 256; ++i) scenarios.push_back(testkit::random_scenario(rng, i));
  const auto& kb = planner::default_knowledge_base();
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(planner::plan(scenarios[i++ % scenarios.size()], kb));
}
BENCHMARK(BM_PlanRandom);
