#include <benchmark/benchmark.h>

#include "nettomo/estep.hpp"
#include "nettomo/estimators.hpp"
#include "nettomo/experiments.hpp"
#include "nettomo/lp.hpp"

using namespace nettomo;

namespace {

TrialData trial(int n_exterior, int ticks) {
  SimConfig sim;
  sim.n_exterior = n_exterior;
  return make_trial(sim, SchemeConfig{}, 0, ticks);
}

void BM_IpfColdStart(benchmark::State& state) {
  const TrialData data = trial(static_cast<int>(state.range(0)), 1);
  const auto y = data.observations.tick(0);
  const std::vector<double> y_bar(y.begin(), y.end());
  const auto rates = data.truth.baseline.values();
  for (auto _ : state) benchmark::DoNotOptimize(estep_ipf(data.op, rates, y_bar));
}
BENCHMARK(BM_IpfColdStart)->Arg(6)->Arg(10)->Arg(16);

void BM_ExactEStep(benchmark::State& state) {
  SimConfig sim;
  sim.n_exterior = static_cast<int>(state.range(0));
  sim.baseline_gamma = {0.5, 1.0};
  const TrialData data = make_trial(sim, SchemeConfig{}, 0, 1);
  const auto rates = data.truth.baseline.values();
  for (auto _ : state) benchmark::DoNotOptimize(estep_exact(data.op, rates, data.observations.tick(0)));
}
BENCHMARK(BM_ExactEStep)->Arg(3)->Arg(4);

void BM_L1Projection(benchmark::State& state) {
  const TrialData data = trial(static_cast<int>(state.range(0)), 150);
  const LinearProgram lp = build_l1_projection_lp(data.truth.baseline, data.op, data.observations.mean());
  for (auto _ : state) benchmark::DoNotOptimize(lp_solve(lp));
}
BENCHMARK(BM_L1Projection)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Estimator(benchmark::State& state) {
  const auto tag = static_cast<EstimatorTag>(state.range(0));
  const TrialData data = trial(6, 100);
  const EstimationInput input{data.op, data.observations, data.truth.baseline, nullptr};
  for (auto _ : state) benchmark::DoNotOptimize(run_estimator(tag, input, {}));
  state.SetLabel(to_string(tag));
}
BENCHMARK(BM_Estimator)
    ->Arg(static_cast<int>(EstimatorTag::poisson_mle))
    ->Arg(static_cast<int>(EstimatorTag::hipois))
    ->Arg(static_cast<int>(EstimatorTag::mre))
    ->Arg(static_cast<int>(EstimatorTag::mre_hipois))
    ->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
