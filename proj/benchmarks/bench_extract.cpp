#include <benchmark/benchmark.h>

#include "airsteward/extractor.hpp"
#include "generators.hpp"

using namespace airsteward;

static void BM_ExtractGrandma(benchmark::State& state) {
  const extract::CompiledLexicon lex(extract::default_lexicon());
  for (auto _ : state) {
    extract::SessionContext ctx;
    benchmark::DoNotOptimize(extract::extract("Grandma's asthma has cleared up", ctx, lex));
  }
}
BENCHMARK(BM_ExtractGrandma);

static void BM_ExtractGenerated(benchmark::State& state) {
  testkit::Rng rng(5);
  std::vector<std::string> utterances;
  for (int i = 0; i < 256; ++i) utterances.push_back(testkit::random_utterance(rng));
  const extract::CompiledLexicon lex(extract::default_lexicon());
  extract::SessionContext ctx;
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(extract::extract(utterances[i++ % utterances.size()], ctx, lex));
}
BENCHMARK(BM_ExtractGenerated);

static void BM_CompileLexicon(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(extract::CompiledLexicon(extract::default_lexicon()));
}
BENCHMARK(BM_CompileLexicon);
