// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <memory>
#include <vector>

#include "mcfse/analysis.hpp"
#include "mcfse/montecarlo.hpp"

using namespace mcfse;

namespace {

CirTable reference_cir() {
  ChannelParams p;
  p.molecules = 1.5e4;
  return build_cir_table(p);
}

ExperimentConfig frame_config(int workers) {
  ExperimentConfig cfg;
  cfg.molecules = {1.5e4};
  cfg.channel.molecules = 1.5e4;
  cfg.target_bits = 200'000;
  cfg.seed = 7;
  cfg.workers = workers;
  return cfg;
}

template <bool Parallel>
void BM_CountErrors(benchmark::State& state) {
  const int workers = Parallel ? static_cast<int>(state.range(0)) : 1;
  const auto cfg = frame_config(workers);
  const CirTable cir = reference_cir();
  std::vector<std::unique_ptr<Receiver>> owned;
  std::vector<const Receiver*> receivers;
  for (Scheme s : {Scheme::LinearFse, Scheme::Dfe, Scheme::Mlsd}) {
    owned.push_back(make_receiver(s, cir, cfg.channel.eta, cfg.receiver));
    receivers.push_back(owned.back().get());
  }
  for (auto _ : state) {
    auto tally = Parallel ? count_errors(cfg, cir, receivers) : count_errors_serial(cfg, cir, receivers);
    benchmark::DoNotOptimize(tally);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.target_bits));
}

void BM_AnalyticalParallel(benchmark::State& state) {
  const CirTable cir = reference_cir();
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(analytical_ber_linear(cir, 1.0, static_cast<int>(state.range(0))));
}

void BM_AnalyticalSerial(benchmark::State& state) {
  const CirTable cir = reference_cir();
  for (auto _ : state)
    benchmark::DoNotOptimize(analytical_ber_linear_serial(cir, 1.0, static_cast<int>(state.range(0))));
}

}  // namespace

// Wall-clock time: CPU time of the calling thread hides the worker threads.
BENCHMARK(BM_CountErrors<false>)->Name("count_errors/serial")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CountErrors<true>)
    ->Name("count_errors/parallel")
    ->Arg(1)
    ->Arg(2)
    ->Arg(4)
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_AnalyticalSerial)->Name("analytical_ber/serial")->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_AnalyticalParallel)
    ->Name("analytical_ber/parallel")
    ->Args({1, 1})
    ->Args({1, 4})
    ->Args({3, 1})
    ->Args({3, 4})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

BENCHMARK_MAIN();
