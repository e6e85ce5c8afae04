#include "lcsim/trainer.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

#include "lcsim/analysis.hpp"
#include "lcsim/csv.hpp"
#include "lcsim/parallel.hpp"
#include "lcsim/stats.hpp"

namespace lcsim {

void TrainConfig::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (m < 1) throw std::invalid_argument("batch size m must be >= 1");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (!(init_scale > 0.0)) throw std::invalid_argument("init_scale must be > 0");
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  if (!(eval.temperature > 0.0)) {
    throw std::invalid_argument("temperature must be > 0");
  }
  noise.validate(spec);
  if (initial_params) {
    if (initial_params->feature_count() != spec.feature_count() ||
        initial_params->ambient_dim() != spec.ambient_dim()) {
      throw std::invalid_argument("initial_params shape does not match spec");
    }
    if (!initial_params->all_finite()) {
      throw std::invalid_argument("initial_params must be finite");
    }
  }
}

ModelParams init_params(int feature_count, int ambient_dim, double scale,
                        RngStream& rng) {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("init scale must be > 0");
  }
  ModelParams params(feature_count, ambient_dim);
  rng.fill_normal(params.theta.v);
  const double s = scale / std::sqrt(static_cast<double>(ambient_dim));
  for (double& x : params.theta.v) x *= s;
  return params;
}

namespace {

TrajectoryPoint record_point(int64_t t, const ModelParams& params,
                             const FeatureSpec& spec, const LossReport& rep) {
  const int K = spec.feature_count();
  TrajectoryPoint pt;
  pt.iteration = t;
  pt.angle.resize(static_cast<size_t>(K));
  pt.error.resize(static_cast<size_t>(K));
  pt.theta_norm.resize(static_cast<size_t>(K));
  for (int k = 0; k < K; ++k) {
    const auto angle = alignment_angle(params.row(k), spec.direction(k));
    if (!angle) {
      throw NumericalAbort("theta_" + std::to_string(k) +
                               " contracted to zero at iteration " +
                               std::to_string(t),
                           t, params);
    }
    pt.angle[static_cast<size_t>(k)] = *angle;
    pt.error[static_cast<size_t>(k)] = downstream_error(*angle);
    pt.theta_norm[static_cast<size_t>(k)] = std::sqrt(norm2(params.row(k)));
  }
  pt.p_correct_mean = rep.mean_correct_probability;
  pt.loss = rep.loss;
  return pt;
}

Trajectory run_one(const TrainConfig& config, const RngStream& run_stream) {
  ModelParams params;
  if (config.initial_params) {
    params = *config.initial_params;
  } else {
    RngStream init = run_stream.child(StreamPurpose::kInit);
    params = init_params(config.spec.feature_count(),
                         config.spec.ambient_dim(), config.init_scale, init);
  }

  Trajectory trajectory;
  const int64_t T = config.iterations;
  for (int64_t t = 0; t <= T; ++t) {
    RngStream batch_stream =
        run_stream.child(StreamPurpose::kBatch, static_cast<uint64_t>(t));
    PairBatch batch = sample_batch(config.spec, config.m, batch_stream);
    if (config.noise.active_at(t)) {
      RngStream noise_stream =
          run_stream.child(StreamPurpose::kNoise, static_cast<uint64_t>(t));
      batch = add_noise(batch, config.noise, config.spec, noise_stream);
    }

    LossReport rep;
    try {
      rep = evaluate(params, batch, config.eval);
    } catch (const std::domain_error& e) {
      throw NumericalAbort(
          std::string(e.what()) + " at iteration " + std::to_string(t), t,
          params);
    }

    if (t == T || t % config.record_every == 0) {
      trajectory.points.push_back(record_point(t, params, config.spec, rep));
    }
    if (t == T) break;

    ModelParams next = apply_update(params, rep.grad, config.eta, config.lambda);
    if (!next.all_finite()) {
      throw NumericalAbort("non-finite parameters after update at iteration " +
                               std::to_string(t),
                           t, params);
    }
    params = std::move(next);
  }
  trajectory.final_params = std::move(params);
  return trajectory;
}

}  // namespace

Trajectory run(const TrainConfig& config) {
  config.validate();
  return run_one(config, RngStream(config.seed).child(StreamPurpose::kRun, 0));
}

std::vector<Trajectory> run_ensemble(const TrainConfig& config, int n_runs,
                                     int threads) {
  config.validate();
  if (n_runs < 1) {
    throw std::invalid_argument("n_runs must be >= 1");
  }
  const RngStream root(config.seed);
  std::vector<Trajectory> runs(static_cast<size_t>(n_runs));
  parallel_for(n_runs, threads, [&](int64_t r) {
    try {
      runs[static_cast<size_t>(r)] =
          run_one(config, root.child(StreamPurpose::kRun, static_cast<uint64_t>(r)));
    } catch (NumericalAbort& abort) {
      abort.run = static_cast<int>(r);
      throw;
    }
  });
  return runs;
}

AggregateTrajectory aggregate_trajectories(const std::vector<Trajectory>& runs) {
  if (runs.empty()) {
    throw std::invalid_argument("aggregate: need at least one run");
  }
  const size_t n_points = runs[0].points.size();
  for (const Trajectory& r : runs) {
    if (r.points.size() != n_points) {
      throw std::invalid_argument("aggregate: recording grids differ");
    }
  }

  AggregateTrajectory agg;
  agg.n_runs = static_cast<int>(runs.size());
  agg.points.resize(n_points);
  for (size_t p = 0; p < n_points; ++p) {
    const TrajectoryPoint& first = runs[0].points[p];
    const size_t K = first.angle.size();
    AggregatePoint& out = agg.points[p];
    out.iteration = first.iteration;
    out.angle_mean.resize(K);
    out.angle_stderr.resize(K);
    out.error_mean.resize(K);
    out.error_stderr.resize(K);
    out.norm_mean.resize(K);
    out.norm_stderr.resize(K);

    for (size_t k = 0; k < K; ++k) {
      RunningSums angle, error, norm;
      for (const Trajectory& r : runs) {
        const TrajectoryPoint& pt = r.points[p];
        if (pt.iteration != first.iteration || pt.angle.size() != K) {
          throw std::invalid_argument("aggregate: recording grids differ");
        }
        angle.add(pt.angle[k]);
        error.add(pt.error[k]);
        norm.add(pt.theta_norm[k]);
      }
      out.angle_mean[k] = angle.mean();
      out.angle_stderr[k] = angle.stderror();
      out.error_mean[k] = error.mean();
      out.error_stderr[k] = error.stderror();
      out.norm_mean[k] = norm.mean();
      out.norm_stderr[k] = norm.stderror();
    }

    RunningSums prob, loss;
    for (const Trajectory& r : runs) {
      prob.add(r.points[p].p_correct_mean);
      loss.add(r.points[p].loss);
    }
    out.p_mean = prob.mean();
    out.p_stderr = prob.stderror();
    out.loss_mean = loss.mean();
    out.loss_stderr = loss.stderror();
  }
  return agg;
}

void write_trajectory_csv(const std::string& path, const Trajectory& trajectory,
                          const std::vector<std::string>& comments) {
  CsvWriter writer(path);
  for (const std::string& c : comments) writer.comment(c);
  writer.header({"iteration", "k", "angle_rad", "downstream_error",
                 "p_correct_mean", "loss", "theta_norm"});
  for (const TrajectoryPoint& pt : trajectory.points) {
    for (size_t k = 0; k < pt.angle.size(); ++k) {
      writer.row({std::to_string(pt.iteration), std::to_string(k),
                  format_double(pt.angle[k]), format_double(pt.error[k]),
                  format_double(pt.p_correct_mean), format_double(pt.loss),
                  format_double(pt.theta_norm[k])});
    }
  }
  writer.flush();
}

void write_aggregate_csv(const std::string& path,
                         const std::vector<NamedAggregate>& arms,
                         const std::vector<std::string>& comments) {
  CsvWriter writer(path);
  for (const std::string& c : comments) writer.comment(c);
  writer.header({"arm", "iteration", "k", "angle_rad_mean", "angle_rad_stderr",
                 "downstream_error_mean", "downstream_error_stderr",
                 "p_correct_mean", "p_correct_stderr", "loss_mean",
                 "loss_stderr", "theta_norm_mean", "theta_norm_stderr"});
  for (const NamedAggregate& arm : arms) {
    for (const AggregatePoint& pt : arm.aggregate->points) {
      for (size_t k = 0; k < pt.angle_mean.size(); ++k) {
        writer.row({arm.arm, std::to_string(pt.iteration), std::to_string(k),
                    format_double(pt.angle_mean[k]),
                    format_double(pt.angle_stderr[k]),
                    format_double(pt.error_mean[k]),
                    format_double(pt.error_stderr[k]),
                    format_double(pt.p_mean), format_double(pt.p_stderr),
                    format_double(pt.loss_mean), format_double(pt.loss_stderr),
                    format_double(pt.norm_mean[k]),
                    format_double(pt.norm_stderr[k])});
      }
    }
  }
  writer.flush();
}

nlohmann::json train_config_to_json(const TrainConfig& config) {
  nlohmann::json j;
  j["feature_space"] = feature_spec_to_json(config.spec);
  j["eta"] = config.eta;
  j["lambda"] = config.lambda;
  j["m"] = config.m;
  j["iterations"] = config.iterations;
  j["init_scale"] = config.init_scale;
  j["seed"] = config.seed;
  j["record_every"] = config.record_every;
  if (!config.noise.empty()) {
    j["noise"] = noise_schedule_to_json(config.noise);
  }
  if (config.eval.temperature != 1.0) {
    j["temperature"] = config.eval.temperature;
  }
  if (config.eval.aggregation != LossAggregation::kSum) {
    j["aggregation"] = "mean";
  }
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  static const char* known[] = {"feature_space", "eta",        "lambda",
                                "m",             "iterations", "init_scale",
                                "seed",          "record_every", "noise",
                                "temperature",   "aggregation"};
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }

  TrainConfig config(feature_spec_from_json(j.at("feature_space")));
  if (j.contains("eta")) config.eta = j.at("eta").get<double>();
  if (j.contains("lambda")) config.lambda = j.at("lambda").get<double>();
  if (j.contains("m")) config.m = j.at("m").get<int>();
  if (j.contains("iterations")) config.iterations = j.at("iterations").get<int64_t>();
  if (j.contains("init_scale")) config.init_scale = j.at("init_scale").get<double>();
  if (j.contains("seed")) config.seed = j.at("seed").get<uint64_t>();
  if (j.contains("record_every")) config.record_every = j.at("record_every").get<int64_t>();
  if (j.contains("noise")) {
    config.noise =
        noise_schedule_from_json(j.at("noise"), config.spec.feature_count());
  }
  if (j.contains("temperature")) {
    config.eval.temperature = j.at("temperature").get<double>();
  }
  if (j.contains("aggregation")) {
    const std::string mode = j.at("aggregation").get<std::string>();
    if (mode == "sum") {
      config.eval.aggregation = LossAggregation::kSum;
    } else if (mode == "mean") {
      config.eval.aggregation = LossAggregation::kMean;
    } else {
      throw std::invalid_argument("aggregation must be \"sum\" or \"mean\"");
    }
  }
  config.validate();
  return config;
}

}  // namespace lcsim
