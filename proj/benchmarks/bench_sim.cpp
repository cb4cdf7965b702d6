#include <benchmark/benchmark.h>

#include "airsteward/sim.hpp"
#include "generators.hpp"

using namespace airsteward;

static void BM_Step(benchmark::State& state) {
  testkit::Rng rng(6);
  const auto plan = testkit::random_plan(rng);
  const auto out = testkit::random_outdoor(rng);
  sim::SimState s;
  s.indoor = testkit::random_indoor(rng);
  s = sim::apply_plan(s, plan);
  const sim::SimParams params;
  for (auto _ : state) {
    s = sim::step(s, plan, out, params, 1.0);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_Step);

static void BM_Episode(benchmark::State& state) {
  const auto s = planner::load_scenario(testkit::source_path("scenarios/demo.json"));
  const auto& kb = planner::default_knowledge_base();
  for (auto _ : state) benchmark::DoNotOptimize(sim::run_episode(s, kb, {}, 240, 30));
}
BENCHMARK(BM_Episode)->Unit(benchmark::kMillisecond);
