// Microbenchmarks for the hot paths: normal generation, batch sampling,
// loss/gradient evaluation, and a full training iteration. Shapes default to
// the reproduction protocol (K = 51, d = 5, m = 25).

#include <vector>

#include <benchmark/benchmark.h>

#include "lcsim/feature_space.hpp"
#include "lcsim/model.hpp"
#include "lcsim/rng.hpp"
#include "lcsim/trainer.hpp"

namespace {

lcsim::FeatureSpec bench_spec(int feature_count, int ambient_dim) {
  std::vector<double> alpha(feature_count, 1.0);
  alpha[0] = 0.25;
  return lcsim::FeatureSpec::with_random_directions(feature_count, ambient_dim,
                                                    std::move(alpha), 17);
}

void BM_FillNormal(benchmark::State& state) {
  lcsim::RngStream rng(1);
  std::vector<double> buf(static_cast<size_t>(state.range(0)));
  for (auto _ : state) {
    rng.fill_normal(buf);
    benchmark::DoNotOptimize(buf.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FillNormal)->Arg(1024)->Arg(16384);

void BM_SampleBatch(benchmark::State& state) {
  const lcsim::FeatureSpec spec =
      bench_spec(static_cast<int>(state.range(0)), 5);
  lcsim::RngStream rng(2);
  for (auto _ : state) {
    lcsim::PairBatch batch = lcsim::sample_batch(spec, 25, rng);
    benchmark::DoNotOptimize(batch.views.data());
  }
}
BENCHMARK(BM_SampleBatch)->Arg(2)->Arg(51);

void BM_Evaluate(benchmark::State& state) {
  const lcsim::FeatureSpec spec =
      bench_spec(static_cast<int>(state.range(0)), 5);
  lcsim::RngStream rng(3);
  const lcsim::PairBatch batch = lcsim::sample_batch(spec, 25, rng);
  lcsim::RngStream init = rng.child(lcsim::StreamPurpose::kInit);
  const lcsim::ModelParams params =
      lcsim::init_params(spec.feature_count(), spec.ambient_dim(), 0.1, init);
  for (auto _ : state) {
    lcsim::LossReport report = lcsim::evaluate(params, batch);
    benchmark::DoNotOptimize(report.grad.v.data());
  }
}
BENCHMARK(BM_Evaluate)->Arg(2)->Arg(51);

void BM_TrainIteration(benchmark::State& state) {
  const lcsim::FeatureSpec spec =
      bench_spec(static_cast<int>(state.range(0)), 5);
  lcsim::RngStream rng(4);
  lcsim::RngStream init = rng.child(lcsim::StreamPurpose::kInit);
  lcsim::ModelParams params =
      lcsim::init_params(spec.feature_count(), spec.ambient_dim(), 0.1, init);
  uint64_t t = 0;
  for (auto _ : state) {
    lcsim::RngStream batch_rng = rng.child(lcsim::StreamPurpose::kBatch, t++);
    const lcsim::PairBatch batch = lcsim::sample_batch(spec, 25, batch_rng);
    const lcsim::LossReport report = lcsim::evaluate(params, batch);
    params = lcsim::apply_update(params, report.grad, 0.0025, 0.01);
    benchmark::DoNotOptimize(params.theta.v.data());
  }
}
BENCHMARK(BM_TrainIteration)->Arg(2)->Arg(51);

void BM_FullRun(benchmark::State& state) {
  lcsim::TrainConfig config(bench_spec(8, 5));
  config.eta = 0.0025;
  config.m = 25;
  config.iterations = 50;
  config.seed = 5;
  config.record_every = 10;
  for (auto _ : state) {
    lcsim::Trajectory trajectory = lcsim::run(config);
    benchmark::DoNotOptimize(trajectory.final_params.theta.v.data());
  }
}
BENCHMARK(BM_FullRun);

}  // namespace

BENCHMARK_MAIN();
