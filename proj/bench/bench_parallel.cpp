#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "fescale/backends.hpp"
#include "fescale/eval.hpp"
#include "fescale/parallel.hpp"
#include "fescale/pipeline.hpp"

namespace {

std::vector<double> synthetic_scores(std::size_t n) {
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = (i % 7 < 4) ? 1.0 : (i % 7 == 4 ? 0.5 : 0.0);
  return scores;
}

void BM_BootstrapSerial(benchmark::State& state) {
  const auto scores = synthetic_scores(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fescale::bootstrap_win_rates_serial(scores, 1000, 7));
  }
}
BENCHMARK(BM_BootstrapSerial)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_BootstrapParallel(benchmark::State& state) {
  const auto scores = synthetic_scores(static_cast<std::size_t>(state.range(0)));
  const int workers = fescale::hardware_workers();
  for (auto _ : state) {
    benchmark::DoNotOptimize(fescale::bootstrap_win_rates(scores, 1000, 7, workers));
  }
}
BENCHMARK(BM_BootstrapParallel)->Arg(500)->Arg(5000)->Unit(benchmark::kMillisecond);

// Reward scoring of a candidate pool against the mock, the fan-out used by select_best.
void BM_SelectBest(benchmark::State& state) {
  fescale::MockBackend mock(fescale::MockOptions{});
  const auto prompt = fescale::Conversation::single_prompt("Summarise the causes of the 1929 crash.");
  std::vector<fescale::Candidate> pool;
  for (int i = 0; i < 256; ++i) {
    pool.push_back({"candidate " + std::to_string(i), fescale::InitialProvenance{i}, std::nullopt});
  }
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto copy = pool;
    benchmark::DoNotOptimize(fescale::select_best(prompt, copy, mock, {}, workers));
  }
}
BENCHMARK(BM_SelectBest)->Arg(1)->Arg(4)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
