#include "lcsim/feature_space.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "lcsim/rng.hpp"

namespace lcsim {
namespace {

FeatureSpec demo_spec(double alpha0 = 0.5, double alpha1 = 0.9) {
  return FeatureSpec::with_random_directions(2, 3, {alpha0, alpha1}, 77);
}

TEST(FeatureSpec, RandomDirectionsAreUnit) {
  FeatureSpec spec = FeatureSpec::with_random_directions(6, 4, std::vector<double>(6, 0.5), 5);
  for (int k = 0; k < 6; ++k) {
    EXPECT_NEAR(dot(spec.direction(k), spec.direction(k)), 1.0, 1e-12);
  }
}

TEST(FeatureSpec, ComplementBasisIsOrthonormal) {
  FeatureSpec spec = demo_spec();
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i + 1 < 3; ++i) {
      EXPECT_NEAR(dot(spec.complement_vector(k, i), spec.direction(k)), 0.0, 1e-12);
      for (int j = 0; j + 1 < 3; ++j) {
        EXPECT_NEAR(dot(spec.complement_vector(k, i), spec.complement_vector(k, j)),
                    i == j ? 1.0 : 0.0, 1e-12);
      }
    }
  }
}

TEST(FeatureSpec, RejectsBadInputs) {
  Mat not_unit(1, 2);
  not_unit.row(0)[0] = 2.0;
  EXPECT_THROW(FeatureSpec(1, 2, not_unit, {0.5}), std::invalid_argument);

  Mat e1(1, 2);
  e1.row(0)[0] = 1.0;
  EXPECT_THROW(FeatureSpec(1, 2, e1, {1.5}), std::invalid_argument);
  EXPECT_THROW(FeatureSpec(1, 2, e1, {-0.1}), std::invalid_argument);
  EXPECT_THROW(FeatureSpec(1, 2, e1, {0.1, 0.2}), std::invalid_argument);
}

// The drawn coordinates live in the (mu, complement) frame, so per-feature
// dot products depend only on the stream, not on the geometry.
TEST(FeatureSpec, PerFeatureDotProductsAreFrameInvariant) {
  FeatureSpec spec_a = FeatureSpec::with_random_directions(2, 5, {0.3, 0.8}, 1);
  FeatureSpec spec_b = FeatureSpec::with_random_directions(2, 5, {0.3, 0.8}, 2);
  RngStream sa(321), sb(321);
  PairBatch a = sample_batch(spec_a, 16, sa);
  PairBatch b = sample_batch(spec_b, 16, sb);
  for (int i = 0; i < 16; ++i) {
    for (int k = 0; k < 2; ++k) {
      EXPECT_NEAR(dot(a.anchor_row(i, k), spec_a.direction(k)),
                  dot(b.anchor_row(i, k), spec_b.direction(k)), 1e-10);
      EXPECT_NEAR(dot(a.view_row(i, k), spec_a.direction(k)),
                  dot(b.view_row(i, k), spec_b.direction(k)), 1e-10);
      EXPECT_NEAR(dot(a.anchor_row(i, k), a.view_row(i, k)),
                  dot(b.anchor_row(i, k), b.view_row(i, k)), 1e-10);
    }
  }
}

TEST(FeatureSpec, FullyCorrelatedFeatureIsPreservedExactly) {
  FeatureSpec spec = FeatureSpec::with_random_directions(1, 4, {1.0}, 9);
  RngStream s(17);
  PairBatch batch = sample_batch(spec, 64, s);
  for (int i = 0; i < 64; ++i) {
    EXPECT_NEAR(dot(batch.anchor_row(i, 0), spec.direction(0)),
                dot(batch.view_row(i, 0), spec.direction(0)), 1e-12);
  }
}

TEST(FeatureSpec, ViewCorrelationMatchesAlpha) {
  // Empirical Cov(u'mu, v'mu) ~= alpha, complement coordinates uncorrelated.
  const int n = 30000;
  for (double alpha : {0.0, 0.5, 1.0}) {
    FeatureSpec spec = FeatureSpec::with_random_directions(1, 3, {alpha}, 3);
    RngStream s(1234);
    double c_par = 0, c_perp = 0, var_u = 0, var_v = 0;
    std::vector<double> u(3), v(3);
    for (int i = 0; i < n; ++i) {
      sample_pair(spec, s, u, v);
      const double a = dot(u, spec.direction(0));
      const double b = dot(v, spec.direction(0));
      c_par += a * b;
      c_perp += a * dot(v, spec.complement_vector(0, 0));
      var_u += a * a;
      var_v += b * b;
    }
    EXPECT_NEAR(c_par / n, alpha, 0.03) << "alpha = " << alpha;
    EXPECT_NEAR(c_perp / n, 0.0, 0.03);
    EXPECT_NEAR(var_u / n, 1.0, 0.03);
    EXPECT_NEAR(var_v / n, 1.0, 0.03);
  }
}

TEST(FeatureSpec, BatchMatchesPairwiseSampling) {
  FeatureSpec spec = demo_spec();
  RngStream s1(55), s2(55);
  PairBatch batch = sample_batch(spec, 8, s1);
  std::vector<double> u(2 * 3), v(2 * 3);
  for (int i = 0; i < 8; ++i) {
    sample_pair(spec, s2, u, v);
    for (int j = 0; j < 6; ++j) {
      EXPECT_EQ(batch.anchor_point(i)[j], u[j]);
      EXPECT_EQ(batch.view_point(i)[j], v[j]);
    }
  }
}

TEST(BatchDraws, MaterializeReproducesSampleBatch) {
  FeatureSpec spec = demo_spec();
  RngStream s1(808), s2(808);
  PairBatch direct = sample_batch(spec, 12, s1);
  BatchDraws draws = sample_batch_draws(spec, 12, s2);
  PairBatch rebuilt = draws.materialize(spec);
  EXPECT_EQ(direct.anchors, rebuilt.anchors);
  EXPECT_EQ(direct.views, rebuilt.views);

  PairBatch same = draws.materialize_with(spec, 0, spec.correlation(0));
  EXPECT_EQ(direct.anchors, same.anchors);
  EXPECT_EQ(direct.views, same.views);
}

TEST(BatchDraws, SubstitutionTouchesOnlyTheTargetFeatureViews) {
  FeatureSpec spec = demo_spec();
  RngStream s(909);
  BatchDraws draws = sample_batch_draws(spec, 6, s);
  PairBatch base = draws.materialize(spec);
  PairBatch bumped = draws.materialize_with(spec, 0, 0.95);
  EXPECT_EQ(base.anchors, bumped.anchors);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_EQ(base.view_row(i, 1)[j], bumped.view_row(i, 1)[j]);
    }
    // Substituting alpha moves the view along mu only.
    EXPECT_NEAR(dot(base.view_row(i, 0), spec.complement_vector(0, 0)),
                dot(bumped.view_row(i, 0), spec.complement_vector(0, 0)), 1e-12);
  }
  EXPECT_THROW(draws.materialize_with(spec, 2, 0.5), std::invalid_argument);
  EXPECT_THROW(draws.materialize_with(spec, 0, 1.5), std::invalid_argument);
}

TEST(NoiseSchedule, EmptyScheduleIsIdentity) {
  FeatureSpec spec = demo_spec();
  RngStream s(31);
  PairBatch batch = sample_batch(spec, 5, s);
  RngStream noise(32);
  PairBatch out = add_noise(batch, NoiseSchedule::none(), spec, noise);
  EXPECT_EQ(batch.anchors, out.anchors);
  EXPECT_EQ(batch.views, out.views);
}

TEST(NoiseSchedule, TouchesOnlyTargetViewRows) {
  FeatureSpec spec = demo_spec();
  RngStream s(33);
  PairBatch batch = sample_batch(spec, 5, s);
  RngStream noise(34);
  NoiseSchedule sched = NoiseSchedule::uniform({1}, 0.0, 0);
  PairBatch out = add_noise(batch, sched, spec, noise);
  EXPECT_EQ(batch.anchors, out.anchors);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_EQ(batch.view_row(i, 0)[j], out.view_row(i, 0)[j]);
    }
    bool changed = false;
    for (int j = 0; j < 3; ++j) {
      changed = changed || batch.view_row(i, 1)[j] != out.view_row(i, 1)[j];
    }
    EXPECT_TRUE(changed) << "pair " << i;
  }
}

TEST(NoiseSchedule, BetaMixingShrinksEffectiveCorrelation) {
  // After noise with beta, Cov(u'mu, v~'mu) ~= beta * alpha.
  const int n = 30000;
  const double alpha = 0.8;
  FeatureSpec spec = FeatureSpec::with_random_directions(1, 3, {alpha}, 21);
  for (double beta : {0.0, 0.25, 0.5, 0.75}) {
    RngStream s(500), noise(501);
    NoiseSchedule sched = NoiseSchedule::uniform({0}, beta, 0);
    double acc = 0;
    for (int chunk = 0; chunk < n / 100; ++chunk) {
      PairBatch batch = sample_batch(spec, 100, s);
      PairBatch noisy = add_noise(batch, sched, spec, noise);
      for (int i = 0; i < 100; ++i) {
        acc += dot(noisy.anchor_row(i, 0), spec.direction(0)) *
               dot(noisy.view_row(i, 0), spec.direction(0));
      }
    }
    EXPECT_NEAR(acc / n, beta * alpha, 0.03) << "beta = " << beta;
  }

  NoiseSchedule sched = NoiseSchedule::uniform({0}, 0.25, 0);
  const std::vector<double> eff = effective_correlations(spec, sched);
  EXPECT_DOUBLE_EQ(eff[0], 0.25 * alpha);
}

TEST(NoiseSchedule, ValidateRejectsBadSchedules) {
  FeatureSpec spec = demo_spec();
  EXPECT_THROW(NoiseSchedule::uniform({0}, 1.0, 0).validate(spec), std::invalid_argument);
  EXPECT_THROW(NoiseSchedule::uniform({0}, -0.1, 0).validate(spec), std::invalid_argument);
  EXPECT_THROW(NoiseSchedule::uniform({2}, 0.5, 0).validate(spec), std::invalid_argument);
  EXPECT_NO_THROW(NoiseSchedule::uniform({0, 1}, 0.999, 10).validate(spec));
}

TEST(NoiseSchedule, ActivationWindow) {
  NoiseSchedule sched = NoiseSchedule::uniform({0}, 0.0, 50);
  EXPECT_FALSE(sched.active_at(49));
  EXPECT_TRUE(sched.active_at(50));
  EXPECT_TRUE(sched.active_at(51));
  sched.start_iteration = NoiseSchedule::kNever;
  EXPECT_FALSE(sched.active_at(1000000));
  EXPECT_FALSE(NoiseSchedule::none().active_at(0));
}

TEST(PairBatch, ValidateCatchesNonFinite) {
  FeatureSpec spec = demo_spec();
  RngStream s(3);
  PairBatch batch = sample_batch(spec, 3, s);
  EXPECT_NO_THROW(batch.validate());
  batch.views[4] = std::nan("");
  EXPECT_THROW(batch.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace lcsim
