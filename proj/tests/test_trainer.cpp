#include "lcsim/trainer.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "lcsim/analysis.hpp"
#include "lcsim/feature_space.hpp"
#include "lcsim/model.hpp"
#include "lcsim/rng.hpp"

namespace lcsim {
namespace {

TrainConfig small_config() {
  TrainConfig config(FeatureSpec::with_random_directions(2, 3, {0.4, 0.9}, 11));
  config.eta = 0.02;
  config.lambda = 0.01;
  config.m = 8;
  config.iterations = 12;
  config.init_scale = 0.1;
  config.seed = 1001;
  return config;
}

TEST(Trainer, ValidateRejectsBadConfigs) {
  TrainConfig config = small_config();
  EXPECT_NO_THROW(config.validate());
  config.eta = 0.0;
  EXPECT_THROW(config.validate(), std::invalid_argument);
  config = small_config();
  config.m = 0;
  EXPECT_THROW(config.validate(), std::invalid_argument);
  config = small_config();
  config.iterations = 0;
  EXPECT_THROW(config.validate(), std::invalid_argument);
  config = small_config();
  config.record_every = 0;
  EXPECT_THROW(config.validate(), std::invalid_argument);
  config = small_config();
  config.initial_params = ModelParams(1, 3);  // wrong K
  EXPECT_THROW(config.validate(), std::invalid_argument);
}

TEST(Trainer, RunsAreDeterministic) {
  const TrainConfig config = small_config();
  const Trajectory a = run(config);
  const Trajectory b = run(config);
  ASSERT_EQ(a.points.size(), b.points.size());
  EXPECT_EQ(a.final_params.theta.v, b.final_params.theta.v);
  for (size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].loss, b.points[i].loss);
    EXPECT_EQ(a.points[i].angle, b.points[i].angle);
  }
}

TEST(Trainer, RecordingGridIncludesEndpoints) {
  TrainConfig config = small_config();
  config.iterations = 10;
  config.record_every = 4;
  const Trajectory t = run(config);
  std::vector<int64_t> got;
  for (const TrajectoryPoint& p : t.points) got.push_back(p.iteration);
  EXPECT_EQ(got, (std::vector<int64_t>{0, 4, 8, 10}));

  config.record_every = 1;
  const Trajectory dense = run(config);
  EXPECT_EQ(dense.points.size(), 11u);
}

// Pins the stream layout: run r == seed.child(kRun, r), batch t ==
// run_stream.child(kBatch, t). A trajectory of length one must equal the
// manual composition of the model primitives.
TEST(Trainer, OneIterationMatchesManualStep) {
  TrainConfig config = small_config();
  config.iterations = 1;
  ModelParams start(2, 3);
  RngStream init(314);
  for (int k = 0; k < 2; ++k) {
    for (double& x : start.row(k)) x = 0.05 * init.normal();
  }
  config.initial_params = start;

  const Trajectory t = run(config);

  RngStream batch_stream =
      RngStream(config.seed).child(StreamPurpose::kRun, 0).child(StreamPurpose::kBatch, 0);
  const PairBatch batch = sample_batch(config.spec, config.m, batch_stream);
  const LossReport report = evaluate(start, batch);
  const ModelParams stepped =
      apply_update(start, report.grad, config.eta, config.lambda);

  EXPECT_EQ(t.points[0].loss, report.loss);
  EXPECT_EQ(t.final_params.theta.v, stepped.theta.v);
}

TEST(Trainer, EnsembleRunZeroEqualsSingleRun) {
  const TrainConfig config = small_config();
  const std::vector<Trajectory> runs = run_ensemble(config, 3);
  const Trajectory solo = run(config);
  EXPECT_EQ(runs[0].final_params.theta.v, solo.final_params.theta.v);
  // Distinct runs see distinct batches.
  EXPECT_NE(runs[1].final_params.theta.v, runs[0].final_params.theta.v);
}

TEST(Trainer, EnsembleIsThreadInvariant) {
  const TrainConfig config = small_config();
  const std::vector<Trajectory> one = run_ensemble(config, 5, 1);
  const std::vector<Trajectory> four = run_ensemble(config, 5, 4);
  ASSERT_EQ(one.size(), four.size());
  for (size_t r = 0; r < one.size(); ++r) {
    EXPECT_EQ(one[r].final_params.theta.v, four[r].final_params.theta.v);
  }
}

TEST(Trainer, InactiveNoiseScheduleChangesNothing) {
  TrainConfig clean = small_config();
  TrainConfig inactive = small_config();
  inactive.noise = NoiseSchedule::uniform({1}, 0.0, /*start_iteration=*/1000);
  const Trajectory a = run(clean);
  const Trajectory b = run(inactive);
  EXPECT_EQ(a.final_params.theta.v, b.final_params.theta.v);

  TrainConfig never = small_config();
  never.noise = NoiseSchedule::uniform({1}, 0.0, 0);
  never.noise.start_iteration = NoiseSchedule::kNever;
  const Trajectory c = run(never);
  EXPECT_EQ(a.final_params.theta.v, c.final_params.theta.v);
}

TEST(Trainer, NoiseArmSharesInitAndBatchStreams) {
  // Arms differing only in their noise schedule share the init and batch
  // streams (noise draws come from a separate purpose tag), which is the
  // common-random-numbers design the paired experiments rely on.
  TrainConfig clean = small_config();
  TrainConfig noisy = small_config();
  noisy.noise = NoiseSchedule::uniform({1}, 0.0, 0);
  const Trajectory a = run(clean);
  const Trajectory b = run(noisy);
  ASSERT_EQ(a.points.size(), b.points.size());
  // Identical parameters at t = 0, so identical recorded angles; the noised
  // evaluation batch already moves the loss.
  EXPECT_EQ(a.points[0].angle, b.points[0].angle);
  EXPECT_NE(a.points[0].loss, b.points[0].loss);
  EXPECT_NE(a.final_params.theta.v, b.final_params.theta.v);
}

TEST(Trainer, PureDecayPreservesAngles) {
  // Weight decay rescales rows; the recorded angle must not move under a
  // decay-only step.
  FeatureSpec spec = FeatureSpec::with_random_directions(1, 3, {0.5}, 21);
  ModelParams params(1, 3);
  params.row(0)[0] = 0.3;
  params.row(0)[1] = -0.2;
  params.row(0)[2] = 0.1;
  Mat zero_grad(1, 3);
  const ModelParams decayed = apply_update(params, zero_grad, 0.1, 0.5);
  const double before = *alignment_angle(params.row(0), spec.direction(0));
  const double after = *alignment_angle(decayed.row(0), spec.direction(0));
  EXPECT_NEAR(after, before, 1e-12);
  EXPECT_LT(norm2(decayed.row(0)), norm2(params.row(0)));
}

TEST(Trainer, InitParamsRowNorm) {
  RngStream rng(77);
  const int n = 3000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const ModelParams p = init_params(1, 5, 0.1, rng);
    acc += norm2(p.row(0));
  }
  // E|row|^2 = scale^2; se of the estimate is scale^2 sqrt(2/(d n)).
  EXPECT_NEAR(acc / n, 0.01, 5 * 0.01 * std::sqrt(2.0 / (5.0 * n)));
}

TEST(Trainer, DivergenceRaisesNumericalAbort) {
  TrainConfig config = small_config();
  config.eta = 100.0;
  config.iterations = 200;
  try {
    (void)run_ensemble(config, 2, 1);
    FAIL() << "expected NumericalAbort";
  } catch (const NumericalAbort& abort) {
    EXPECT_GE(abort.iteration, 0);
    EXPECT_LE(abort.iteration, 200);
    EXPECT_GE(abort.run, 0);
    EXPECT_TRUE(abort.last_good.all_finite());
  }
}

TEST(Trainer, AggregateMatchesHandComputation) {
  TrainConfig config = small_config();
  config.iterations = 3;
  const std::vector<Trajectory> runs = run_ensemble(config, 4);
  const AggregateTrajectory agg = aggregate_trajectories(runs);
  EXPECT_EQ(agg.n_runs, 4);
  ASSERT_EQ(agg.points.size(), runs[0].points.size());

  const size_t t = 2;
  double s = 0, ss = 0;
  for (const Trajectory& r : runs) {
    const double x = r.points[t].angle[1];
    s += x;
    ss += x * x;
  }
  const double mean = s / 4;
  const double se = std::sqrt(std::max(0.0, (ss - 4 * mean * mean) / 3) / 4);
  EXPECT_NEAR(agg.points[t].angle_mean[1], mean, 1e-14);
  EXPECT_NEAR(agg.points[t].angle_stderr[1], se, 1e-14);

  const AggregateTrajectory single = aggregate_trajectories({runs[0]});
  EXPECT_EQ(single.points[t].angle_stderr[1], 0.0);
  EXPECT_EQ(single.points[t].angle_mean[1], runs[0].points[t].angle[1]);
}

}  // namespace
}  // namespace lcsim
