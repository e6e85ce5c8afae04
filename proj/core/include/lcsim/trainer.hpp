#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lcsim/feature_space.hpp"
#include "lcsim/model.hpp"
#include "lcsim/rng.hpp"

namespace lcsim {

struct TrainConfig {
  FeatureSpec spec;
  double eta = 0.5;
  double lambda = 0.01;
  int m = 25;
  int64_t iterations = 150;
  double init_scale = 0.1;
  uint64_t seed = 0;
  NoiseSchedule noise;  // none by default
  int64_t record_every = 1;
  EvalOptions eval;
  // Testing hook: start from these parameters instead of a random draw.
  std::optional<ModelParams> initial_params;

  explicit TrainConfig(FeatureSpec s) : spec(std::move(s)) {}

  void validate() const;
};

// Metrics at one recorded iteration, computed from the pre-update parameters
// and that iteration's batch (after any noise injection).
struct TrajectoryPoint {
  int64_t iteration = 0;
  std::vector<double> angle;       // per feature, arccos(|mu.theta|/|theta|)
  std::vector<double> error;       // per feature, angle / pi
  std::vector<double> theta_norm;  // per feature
  double p_correct_mean = 0.0;     // (1/m) sum_i p_ii
  double loss = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;
  ModelParams final_params;
};

// Thrown when training reaches a state whose metrics are undefined:
// non-finite parameters or scores, or a zero parameter row. Carries the
// failing iteration and the last finite parameters.
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(const std::string& what, int64_t iteration,
                 ModelParams last_good)
      : std::runtime_error(what),
        iteration(iteration),
        last_good(std::move(last_good)) {}

  int64_t iteration = 0;
  int run = -1;  // filled in by run_ensemble
  ModelParams last_good;
};

// Entries i.i.d. N(0, scale^2 / d), so each row has expected norm `scale`.
ModelParams init_params(int feature_count, int ambient_dim, double scale,
                        RngStream& rng);

// Gradient descent with weight decay:
//   Theta <- Theta - eta (grad + lambda Theta)
// One fresh batch per iteration from the (run, iteration) stream; the noise
// schedule resamples its target view rows once it activates. Metrics are
// recorded before each update at every record_every-th iteration, plus a
// final point at t = iterations from a fresh evaluation batch.
Trajectory run(const TrainConfig& config);

// n_runs independent trajectories; run r draws from the (seed, run r)
// stream, so any two arms that share a seed see identical batches and
// run(config) is exactly run 0. Aborts propagate with the run index set.
std::vector<Trajectory> run_ensemble(const TrainConfig& config, int n_runs,
                                     int threads = 1);

// Across-run mean and standard error per recorded point. All runs of one
// config share the recording grid.
struct AggregatePoint {
  int64_t iteration = 0;
  std::vector<double> angle_mean, angle_stderr;
  std::vector<double> error_mean, error_stderr;
  std::vector<double> norm_mean, norm_stderr;
  double p_mean = 0.0, p_stderr = 0.0;
  double loss_mean = 0.0, loss_stderr = 0.0;
};

struct AggregateTrajectory {
  int n_runs = 0;
  std::vector<AggregatePoint> points;
};

AggregateTrajectory aggregate_trajectories(const std::vector<Trajectory>& runs);

// One row per (recorded iteration, feature):
//   iteration,k,angle_rad,downstream_error,p_correct_mean,loss,theta_norm
void write_trajectory_csv(const std::string& path, const Trajectory& trajectory,
                          const std::vector<std::string>& comments = {});

// Long-format ensemble summary, one block per named arm:
//   arm,iteration,k,angle_rad_mean,angle_rad_stderr,downstream_error_mean,
//   downstream_error_stderr,p_correct_mean,p_correct_stderr,loss_mean,
//   loss_stderr,theta_norm_mean,theta_norm_stderr
struct NamedAggregate {
  std::string arm;
  const AggregateTrajectory* aggregate;
};

void write_aggregate_csv(const std::string& path,
                         const std::vector<NamedAggregate>& arms,
                         const std::vector<std::string>& comments = {});

// Config codec. from_json rejects unknown keys; see feature_space for the
// nested feature_space / noise shorthands.
nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace lcsim
