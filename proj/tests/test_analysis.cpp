#include "lcsim/analysis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "lcsim/feature_space.hpp"
#include "lcsim/model.hpp"
#include "lcsim/rng.hpp"
#include "lcsim/stats.hpp"

namespace lcsim {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(AlignmentAngle, HandValues) {
  const std::vector<double> mu = {1.0, 0.0};
  EXPECT_NEAR(*alignment_angle(std::vector<double>{1.0, 1.0}, mu), kPi / 4, 1e-15);
  EXPECT_NEAR(*alignment_angle(std::vector<double>{0.0, 2.5}, mu), kPi / 2, 1e-15);
  // The angle is against the line through mu, so a sign flip is invisible.
  EXPECT_NEAR(*alignment_angle(std::vector<double>{-1.0, -1.0}, mu), kPi / 4, 1e-15);
  // Colinear vectors clamp cleanly to zero angle.
  EXPECT_DOUBLE_EQ(*alignment_angle(std::vector<double>{3.0, 0.0}, mu), 0.0);
  EXPECT_FALSE(alignment_angle(std::vector<double>{0.0, 0.0}, mu).has_value());
}

TEST(Downstream, ClosedFormEndpoints) {
  EXPECT_DOUBLE_EQ(downstream_error(0.0), 0.0);
  EXPECT_DOUBLE_EQ(downstream_error(kPi / 2), 0.5);
  EXPECT_DOUBLE_EQ(downstream_error(kPi / 4), 0.25);
  EXPECT_DOUBLE_EQ(downstream_error(kPi / 8), 0.125);
}

TEST(Downstream, EmpiricalMatchesClosedForm) {
  const int64_t n = 200000;
  const double tol = 4.0 / std::sqrt(static_cast<double>(n));
  const std::vector<double> mu = {1.0, 0.0, 0.0};
  const RngStream rng(606);
  for (double t : {0.0, 0.35, 0.8, kPi / 2}) {
    const std::vector<double> theta = {std::cos(t), std::sin(t), 0.0};
    const double emp = downstream_error_empirical(theta, mu, n, rng);
    EXPECT_NEAR(emp, downstream_error(t), tol) << "angle " << t;
  }
}

TEST(Downstream, ThreadCountDoesNotChangeTheEstimate) {
  const std::vector<double> mu = {1.0, 0.0};
  const std::vector<double> theta = {0.6, 0.8};
  const RngStream rng(607);
  const double e1 = downstream_error_empirical(theta, mu, 300000, rng, 1);
  const double e4 = downstream_error_empirical(theta, mu, 300000, rng, 4);
  EXPECT_EQ(e1, e4);
}

TEST(GradCheck, SuiteGridAgreesWithFiniteDifferences) {
  const GradSuiteReport report = run_grad_suite();
  EXPECT_EQ(report.instances.size(), 27u);
  EXPECT_TRUE(report.pass);
  EXPECT_LT(report.max_rel_err, report.config.tolerance);
}

TEST(Assumptions, ThresholdsTightenWithTheConstant) {
  FeatureSpec spec = theorem_suite_spec();
  ModelParams params = theorem_suite_params(spec);
  bool prev = true;
  for (double c : {5.0, 10.0, 50.0, 500.0}) {
    const TheoremAssumptions a = theorem_assumptions(params, spec, 0, 1, c);
    EXPECT_EQ(a.constant, c);
    // Once violated at some C, larger C cannot restore it.
    if (!prev) EXPECT_FALSE(a.all());
    prev = a.all();
  }
  EXPECT_TRUE(theorem_assumptions(params, spec, 0, 1, 10.0).all());
  EXPECT_FALSE(theorem_assumptions(params, spec, 0, 1, 1e6).all());
}

TEST(OneStep, PairedComparisonIsDeterministicAcrossThreads) {
  FeatureSpec spec = theorem_suite_spec();
  ModelParams params = theorem_suite_params(spec);
  OneStepComparisonConfig config;
  config.n_batches = 2048;
  config.seed = 99;
  config.threads = 1;
  const TheoremCheckReport r1 = one_step_noise_comparison(params, spec, config);
  config.threads = 4;
  const TheoremCheckReport r4 = one_step_noise_comparison(params, spec, config);
  EXPECT_EQ(r1.mean_delta, r4.mean_delta);
  EXPECT_EQ(r1.stderr_delta, r4.stderr_delta);
  EXPECT_EQ(r1.n, r4.n);
}

TEST(OneStep, ReportCarriesAssumptionFlagsPerConstant) {
  FeatureSpec spec = theorem_suite_spec();
  ModelParams params = theorem_suite_params(spec);
  OneStepComparisonConfig config;
  config.n_batches = 256;
  const TheoremCheckReport report = one_step_noise_comparison(params, spec, config);
  ASSERT_EQ(report.assumptions.size(), config.assumption_constants.size());
  EXPECT_TRUE(report.assumptions[1].all());  // C = 10 by construction
  EXPECT_EQ(report.n, 256);
}

TEST(LimitLemma, QuotientConvergesOnFixedBatch) {
  FeatureSpec spec = FeatureSpec::with_random_directions(2, 4, {0.5, 0.8}, 71);
  RngStream s(72);
  PairBatch batch = sample_batch(spec, 6, s);
  ModelParams params(2, 4);
  RngStream init(73);
  for (int k = 0; k < 2; ++k) {
    for (double& x : params.row(k)) x = init.normal() * 0.5;
  }
  const std::vector<double> etas = {8e-6, 4e-6, 2e-6, 1e-6};
  const LimitCheckReport report = limit_lemma_check(params, batch, spec, 0, etas);
  ASSERT_EQ(report.deviations.size(), 4u);
  // Central-difference-free one-sided quotient: error is O(eta), so each
  // halving of eta should roughly halve the deviation.
  for (size_t i = 1; i < 4; ++i) {
    EXPECT_LT(report.deviations[i], report.deviations[i - 1] * 0.75 + 1e-9);
  }
  EXPECT_LT(report.deviations.back(), 1e-3);
}

TEST(LimitLemma, RejectsSingularAlignments) {
  FeatureSpec spec = FeatureSpec::canonical(1, 3, {0.5});
  RngStream s(74);
  PairBatch batch = sample_batch(spec, 4, s);

  ModelParams along(1, 3);
  along.row(0)[0] = 0.7;  // theta parallel to mu: ratio = 1
  const std::vector<double> etas = {1e-6};
  EXPECT_THROW(limit_lemma_check(along, batch, spec, 0, etas), std::invalid_argument);

  ModelParams across(1, 3);
  across.row(0)[1] = 0.7;  // theta orthogonal to mu: ratio = 0
  EXPECT_THROW(limit_lemma_check(across, batch, spec, 0, etas), std::invalid_argument);
}

TEST(LimitLemma, SuitePasses) {
  LimitSuiteConfig config;
  const LimitSuiteReport report = run_limit_suite(config);
  EXPECT_EQ(report.instances.size(), 10u);
  for (const LimitCheckReport& inst : report.instances) {
    EXPECT_GE(inst.ratio, 0.05);
    EXPECT_LE(inst.ratio, 0.95);
  }
  EXPECT_TRUE(report.pass);
  EXPECT_LT(report.max_deviation, config.tolerance);
}

TEST(DerivativeLemma, SingletonBatchesVanishIdentically) {
  // With m = 1 every softmax row is the single entry 1, so the loss is
  // constant in the correlation and both estimators must be exactly zero.
  FeatureSpec spec = derivative_suite_spec();
  ModelParams params = derivative_suite_params(spec);
  DerivativeCheckConfig config;
  config.m = 1;
  config.n_batches = 500;
  const DerivativeCheckReport report = gradient_derivative_check(params, spec, config);
  for (double x : report.fd_mean) EXPECT_EQ(x, 0.0);
  for (double x : report.rhs_mean) EXPECT_EQ(x, 0.0);
  EXPECT_TRUE(report.intervals_overlap);
}

TEST(DerivativeLemma, OrthogonalStrongFeatureZeroesTheClosedForm) {
  // The closed form carries a theta_kp . mu_kp prefactor; making them
  // orthogonal kills it, and the coupled FD must agree within noise.
  FeatureSpec spec = FeatureSpec::canonical(2, 3, {0.8, 0.5});
  ModelParams params(2, 3);
  params.row(0)[0] = 0.4;
  params.row(0)[1] = 0.2;
  params.row(1)[1] = 0.5;  // e_2, orthogonal to mu_1 = e_1
  DerivativeCheckConfig config;
  config.n_batches = 4000;
  const DerivativeCheckReport report = gradient_derivative_check(params, spec, config);
  for (double x : report.rhs_mean) EXPECT_EQ(x, 0.0);
  for (double x : report.rhs_stderr) EXPECT_EQ(x, 0.0);
  EXPECT_TRUE(report.intervals_overlap);
}

TEST(DerivativeLemma, RejectsStepOutsideTheUnitInterval) {
  FeatureSpec spec = derivative_suite_spec();
  ModelParams params = derivative_suite_params(spec);
  DerivativeCheckConfig config;
  config.x0 = 0.995;
  config.dx = 0.01;
  EXPECT_THROW(gradient_derivative_check(params, spec, config), std::invalid_argument);
}

TEST(DerivativeLemma, CheckIsDeterministicAcrossThreads) {
  FeatureSpec spec = derivative_suite_spec();
  ModelParams params = derivative_suite_params(spec);
  DerivativeCheckConfig config;
  config.n_batches = 1024;
  config.threads = 1;
  const DerivativeCheckReport r1 = gradient_derivative_check(params, spec, config);
  config.threads = 3;
  const DerivativeCheckReport r3 = gradient_derivative_check(params, spec, config);
  EXPECT_EQ(r1.fd_mean, r3.fd_mean);
  EXPECT_EQ(r1.rhs_mean, r3.rhs_mean);
}

TEST(RunningSums, MeanAndStderr) {
  RunningSums acc;
  for (double x : {1.0, 2.0, 3.0, 4.0}) acc.add(x);
  EXPECT_DOUBLE_EQ(acc.mean(), 2.5);
  // Sample variance 5/3 over n = 4.
  EXPECT_NEAR(acc.stderror(), std::sqrt(5.0 / 3.0 / 4.0), 1e-15);

  RunningSums left, right;
  left.add(1.0);
  left.add(2.0);
  right.add(3.0);
  right.add(4.0);
  left.merge(right);
  EXPECT_DOUBLE_EQ(left.mean(), acc.mean());
  EXPECT_DOUBLE_EQ(left.stderror(), acc.stderror());

  RunningSums one;
  one.add(5.0);
  EXPECT_DOUBLE_EQ(one.stderror(), 0.0);
}

}  // namespace
}  // namespace lcsim
