#include <benchmark/benchmark.h>

#include "kmt/kmt_embed.hpp"
#include "kmt/lemma_verify.hpp"
#include "kmt/monotone_coupling.hpp"
#include "kmt/rw_embed.hpp"
#include "kmt/stein_markov.hpp"

using namespace kmt;

namespace {

Exec mode(const benchmark::State& state) { return state.range(0) == 0 ? Exec::Serial : Exec::Parallel; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "parallel"); }

void BM_MassDomination(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(lemmas::check_mass_domination(150, mode(state)));
  label(state);
}

void BM_TailDomination(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(lemmas::check_tail_domination(100, mode(state)));
  label(state);
}

void BM_WalkPairSweep(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(coupling::sweep_walk_pair(600, mode(state)));
  label(state);
}

void BM_QuantileSweep(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(coupling::sweep_gaussian_quantile(1024, mode(state)));
  label(state);
}

void BM_BinomialSweep(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(stein::sweep_binomials(16, 0.25, mode(state)));
  label(state);
}

void BM_SteinCrossCheck(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(stein::cross_validate_stein(20, mode(state)));
  label(state);
}

void BM_EpExperiment(benchmark::State& state) {
  ep::EpConfig c;
  c.n_list = {1024};
  c.reps = 200;
  for (auto _ : state) benchmark::DoNotOptimize(ep::run_ep_experiment(c, mode(state)));
  label(state);
}

void BM_BridgeExperiment(benchmark::State& state) {
  rw::RwConfig c;
  c.n_list = {1024};
  c.reps = 200;
  for (auto _ : state) benchmark::DoNotOptimize(rw::run_bridge_experiment(c, mode(state)));
  label(state);
}

}  // namespace

BENCHMARK(BM_MassDomination)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TailDomination)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WalkPairSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QuantileSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BinomialSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SteinCrossCheck)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EpExperiment)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BridgeExperiment)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
