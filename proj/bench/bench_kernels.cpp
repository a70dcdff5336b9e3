// Serial reference against the OpenMP kernels. Both paths produce
// bit-identical results; only wall time differs.

#include <benchmark/benchmark.h>

#include "stacklab/demos.hpp"
#include "stacklab/diagnostics.hpp"
#include "stacklab/engine.hpp"
#include "stacklab/forest.hpp"
#include "stacklab/population.hpp"

using namespace stacklab;

namespace {

Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Exec::kSerial : Exec::kParallel;
}

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) == 0 ? "serial" : "openmp x" + std::to_string(thread_count()));
}

void BM_EngineEpochs(benchmark::State& state) {
  DemoOptions o;
  o.tracked = 50;
  const EngineSpec spec = demo_spec("thm2", 11, o);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_experiment(spec, 20, 11, exec_of(state)));
  }
  label(state);
}

void BM_LimitBounds(benchmark::State& state) {
  DemoOptions o;
  const EngineSpec spec = demo_spec("thm2", 11, o);
  const ProbeSpec probes{500, 8, -4.0, 4.0, 200};
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_limit_bounds(spec.truth, spec.g, probes, RngStream(1), false,
                                                  exec_of(state)));
  }
  label(state);
}

void BM_ForestFit(benchmark::State& state) {
  TrainingSet data;
  data.dimension = health::kDimension;
  RngStream rng(3);
  RngStream truth_rng(4);
  const GroundTruthModel f = build_health_truth(truth_rng);
  for (int i = 0; i < 2000; ++i) {
    const CovariateVector x = sample_individual(default_drug_prevalence(), rng);
    data.add(x.values(), draw_outcome(f, 0, x.values(), rng).y);
  }
  ForestOptions opt;
  opt.n_trees = 50;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_forest(data, opt, RngStream(5), exec_of(state)));
  }
  label(state);
}

void BM_Healthcare(benchmark::State& state) {
  HealthcareConfig c;
  c.individuals = 500;
  c.epochs = 5;
  c.forest.n_trees = 50;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_healthcare(c, 1, exec_of(state)));
  }
  label(state);
}

}  // namespace

BENCHMARK(BM_EngineEpochs)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LimitBounds)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForestFit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Healthcare)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
