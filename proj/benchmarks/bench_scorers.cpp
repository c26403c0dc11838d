#include <benchmark/benchmark.h>

#include "abstain/fumera.hpp"
#include "abstain/scorers.hpp"
#include "abstain/simulation.hpp"

namespace {

using namespace abstain;

SortedPredictionSet figure1_preds(std::size_t n) {
    auto cfg = figure1_config(0);
    cfg.n = n;
    return SortedPredictionSet::from_unsorted(simulate_binary(cfg).posteriors);
}

void BM_DeterministicAurocWindows(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto preds = figure1_preds(n);
    MonteCarloConfig mc;
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_windows_auroc(preds, n / 10, ScorerMode::Deterministic, mc));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DeterministicAurocWindows)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Complexity();

// Cost per Monte-Carlo sample should be linear in N.
void BM_MonteCarloSensWindows(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto preds = figure1_preds(n);
    MonteCarloConfig mc;
    mc.samples = 32;
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_windows_sens_at_spec(preds, 0.9, n * 3 / 10, mc));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MonteCarloSensWindows)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Complexity();

void BM_MonteCarloAurocWindows(benchmark::State& state) {
    auto preds = figure1_preds(10000);
    MonteCarloConfig mc;
    mc.samples = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_windows_auroc(preds, 1000, ScorerMode::MonteCarlo, mc));
    }
}
BENCHMARK(BM_MonteCarloAurocWindows)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_KappaScores(benchmark::State& state) {
    auto cfg = kappa_convergence_config(0);
    auto sim = simulate_multiclass(cfg);
    const auto W = PenaltyWeightMatrix::quadratic(4);
    MonteCarloConfig mc;
    mc.samples = static_cast<std::size_t>(state.range(0));
    const auto mode = state.range(0) == 0 ? ScorerMode::Deterministic : ScorerMode::MonteCarlo;
    if (mc.samples == 0) mc.samples = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_examples_kappa(sim.posteriors, W, mode, mc));
    }
}
BENCHMARK(BM_KappaScores)->Arg(0)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_FumeraBinary(benchmark::State& state) {
    auto cfg = figure1_config(1);
    cfg.n = 2000;
    auto sim = simulate_binary(cfg);
    auto P = ProbabilityMatrix::from_binary(sim.posteriors);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fumera_threshold_search(P, sim.labels, MetricSpec::auroc(), 0.3));
    }
}
BENCHMARK(BM_FumeraBinary)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
