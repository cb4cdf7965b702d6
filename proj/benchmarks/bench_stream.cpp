#include <benchmark/benchmark.h>

#include "airsteward/stream_parser.hpp"
#include "generators.hpp"

using namespace airsteward;

namespace {

std::string sample() {
  testkit::Rng rng(2);
  return stream::render(testkit::random_chain(rng), testkit::random_plan(rng));
}

}  // namespace

static void BM_ParseWhole(benchmark::State& state) {
  const auto text = sample();
  for (auto _ : state) benchmark::DoNotOptimize(stream::parse_whole(text));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseWhole);

static void BM_ParseChunked(benchmark::State& state) {
  const auto text = sample();
  const auto size = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    stream::StreamParser p;
    for (std::size_t pos = 0; pos < text.size(); pos += size) {
      benchmark::DoNotOptimize(p.feed(std::string_view(text).substr(pos, size)));
    }
    benchmark::DoNotOptimize(p.finish());
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseChunked)->Arg(1)->Arg(8)->Arg(64);
