#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "lcsim/csv.hpp"
#include "lcsim/feature_space.hpp"
#include "lcsim/trainer.hpp"

namespace lcsim {
namespace {

TEST(FormatDouble, RoundTripsExactly) {
  const std::vector<double> values = {0.0,
                                      -0.0,
                                      1.0,
                                      0.1,
                                      1.0 / 3.0,
                                      std::numbers::pi,
                                      1e-300,
                                      -123456789.123456789,
                                      6.02214076e23,
                                      0.0025};
  for (double x : values) {
    const std::string s = format_double(x);
    EXPECT_EQ(std::strtod(s.c_str(), nullptr), x) << s;
  }
}

TEST(Csv, WriteReadRoundTrip) {
  const std::string path = ::testing::TempDir() + "roundtrip.csv";
  CsvWriter w(path);
  w.comment("hello");
  w.header({"a", "b"});
  const double x = 1.0 / 3.0;
  w.row({format_double(x), "text"});
  w.row({format_double(-x), "more,"});
  w.flush();

  const CsvTable t = read_csv(path);
  ASSERT_EQ(t.comments.size(), 1u);
  EXPECT_EQ(t.comments[0], "# hello");
  EXPECT_EQ(t.columns, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.num(0, t.column("a")), x);
  EXPECT_EQ(t.num(1, 0), -x);
  EXPECT_EQ(t.cell(0, 1), "text");
}

TEST(FeatureSpecJson, ExplicitRoundTripIsExact) {
  FeatureSpec spec = FeatureSpec::with_random_directions(3, 4, {0.1, 0.5, 1.0}, 123);
  const nlohmann::json j = feature_spec_to_json(spec);
  const FeatureSpec back = feature_spec_from_json(j);
  EXPECT_EQ(feature_spec_to_json(back).dump(), j.dump());
  EXPECT_EQ(back.directions().v, spec.directions().v);
  EXPECT_EQ(back.correlations(), spec.correlations());
}

TEST(FeatureSpecJson, AcceptsShorthands) {
  const nlohmann::json j = {
      {"K", 4},
      {"d", 3},
      {"correlations", {{"default", 1.0}, {"overrides", {{"0", 0.125}}}}},
      {"directions", "canonical"},
  };
  const FeatureSpec spec = feature_spec_from_json(j);
  EXPECT_EQ(spec.correlations(), (std::vector<double>{0.125, 1.0, 1.0, 1.0}));
  EXPECT_DOUBLE_EQ(spec.direction(2)[0], 1.0);
  EXPECT_DOUBLE_EQ(spec.direction(2)[1], 0.0);

  nlohmann::json random = j;
  random["directions"] = "random";
  EXPECT_THROW(feature_spec_from_json(random), std::invalid_argument);
  random["directions_seed"] = 99;
  const FeatureSpec r1 = feature_spec_from_json(random);
  const FeatureSpec r2 = feature_spec_from_json(random);
  EXPECT_EQ(r1.directions().v, r2.directions().v);
}

TEST(NoiseScheduleJson, AcceptsAllForms) {
  const int K = 4;
  NoiseSchedule all = noise_schedule_from_json(
      {{"targets", "all"}, {"beta", 0.5}, {"start_iteration", 10}}, K);
  EXPECT_EQ(all.targets, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(all.betas, (std::vector<double>{0.5, 0.5, 0.5, 0.5}));
  EXPECT_EQ(all.start_iteration, 10);

  NoiseSchedule except = noise_schedule_from_json(
      {{"targets", {{"except", {0, 2}}}}, {"beta", 0.0}}, K);
  EXPECT_EQ(except.targets, (std::vector<int>{1, 3}));

  NoiseSchedule never = noise_schedule_from_json(
      {{"targets", {1}}, {"beta", 0.25}, {"start_iteration", "never"}}, K);
  EXPECT_EQ(never.start_iteration, NoiseSchedule::kNever);
  EXPECT_FALSE(never.active_at(int64_t{1} << 60));

  NoiseSchedule empty = noise_schedule_from_json(nullptr, K);
  EXPECT_TRUE(empty.empty());

  NoiseSchedule listed = noise_schedule_from_json(
      {{"targets", {3, 1}}, {"beta", {0.1, 0.2}}}, K);
  EXPECT_EQ(listed.targets, (std::vector<int>{1, 3}));

  const nlohmann::json round = noise_schedule_to_json(all);
  const NoiseSchedule back = noise_schedule_from_json(round, K);
  EXPECT_EQ(back.targets, all.targets);
  EXPECT_EQ(back.betas, all.betas);
  EXPECT_EQ(back.start_iteration, all.start_iteration);
}

TEST(TrainConfigJson, RoundTripIsStable) {
  TrainConfig config(FeatureSpec::with_random_directions(2, 3, {0.3, 1.0}, 5));
  config.eta = 0.0025;
  config.lambda = 0.01;
  config.m = 25;
  config.iterations = 150;
  config.seed = 5150;
  config.noise = NoiseSchedule::uniform({1}, 0.0, 50);
  const nlohmann::json j = train_config_to_json(config);
  const TrainConfig back = train_config_from_json(j);
  EXPECT_EQ(train_config_to_json(back).dump(), j.dump());
  EXPECT_EQ(back.seed, config.seed);
  EXPECT_EQ(back.noise.targets, config.noise.targets);
}

TEST(TrainConfigJson, RejectsUnknownKeysAndBadValues) {
  nlohmann::json j = {
      {"feature_space",
       {{"K", 1}, {"d", 2}, {"correlations", {0.5}}, {"directions", "canonical"}}},
      {"eta", 0.1},
  };
  EXPECT_NO_THROW(train_config_from_json(j));
  nlohmann::json extra = j;
  extra["learning_rate"] = 0.1;
  EXPECT_THROW(train_config_from_json(extra), std::invalid_argument);
  nlohmann::json bad = j;
  bad["eta"] = 0.0;
  EXPECT_THROW(train_config_from_json(bad), std::invalid_argument);
}

TEST(TrajectoryCsv, RowsRoundTripBitExact) {
  TrainConfig config(FeatureSpec::with_random_directions(2, 3, {0.4, 0.9}, 11));
  config.eta = 0.02;
  config.m = 6;
  config.iterations = 5;
  config.seed = 404;
  const Trajectory t = run(config);
  const std::string path = ::testing::TempDir() + "trajectory.csv";
  write_trajectory_csv(path, t, {"unit test"});

  const CsvTable table = read_csv(path);
  const int c_it = table.column("iteration");
  const int c_k = table.column("k");
  const int c_angle = table.column("angle_rad");
  const int c_loss = table.column("loss");
  ASSERT_GE(c_angle, 0);
  ASSERT_EQ(table.rows.size(), t.points.size() * 2);
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& point = t.points[r / 2];
    const int k = static_cast<int>(table.num(r, c_k));
    EXPECT_EQ(table.num(r, c_it), static_cast<double>(point.iteration));
    EXPECT_EQ(table.num(r, c_angle), point.angle[k]);
    EXPECT_EQ(table.num(r, c_loss), point.loss);
  }
}

}  // namespace
}  // namespace lcsim
