#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcsim/analysis.hpp"
#include "lcsim/csv.hpp"
#include "lcsim/feature_space.hpp"
#include "lcsim/trainer.hpp"
#include "lcsim/version.hpp"

#include "manifest.hpp"
#include "svg_plot.hpp"

namespace lcsim::cli {

namespace {

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot read config file '" + path + "'");
  }
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed JSON in '" + path + "': " + e.what());
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory '" + dir +
                             "': " + ec.message());
  }
}

void reject_unknown_keys(const nlohmann::json& j,
                         std::initializer_list<const char*> known) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
}

struct Arm {
  std::string name;
  NoiseSchedule noise;
};

std::string noise_summary(const NoiseSchedule& noise) {
  if (noise.empty()) return "none";
  if (noise.start_iteration == NoiseSchedule::kNever) return "scheduled never";
  double beta_min = noise.betas[0];
  double beta_max = noise.betas[0];
  for (double b : noise.betas) {
    beta_min = std::min(beta_min, b);
    beta_max = std::max(beta_max, b);
  }
  char buf[96];
  if (beta_min == beta_max) {
    snprintf(buf, sizeof buf, "%zu target(s), beta %s, from iteration %lld",
             noise.targets.size(), format_double(beta_min).c_str(),
             static_cast<long long>(noise.start_iteration));
  } else {
    snprintf(buf, sizeof buf, "%zu target(s), beta %s..%s, from iteration %lld",
             noise.targets.size(), format_double(beta_min).c_str(),
             format_double(beta_max).c_str(),
             static_cast<long long>(noise.start_iteration));
  }
  return buf;
}

std::string arm_summary(const std::string& name, const TrainConfig& config) {
  char buf[192];
  snprintf(buf, sizeof buf,
           "arm %s: K=%d d=%d alpha1=%s eta=%s lambda=%s m=%d T=%lld seed=%llu "
           "noise=%s",
           name.c_str(), config.spec.feature_count(), config.spec.ambient_dim(),
           format_double(config.spec.correlation(0)).c_str(),
           format_double(config.eta).c_str(),
           format_double(config.lambda).c_str(), config.m,
           static_cast<long long>(config.iterations),
           static_cast<unsigned long long>(config.seed),
           noise_summary(config.noise).c_str());
  return buf;
}

// Full per-arm configs live in manifest.json; CSVs only carry enough to
// identify the experiment at a glance plus the manifest fingerprint.
std::vector<std::string> csv_comments(const ExperimentManifest& manifest) {
  std::vector<std::string> out;
  out.push_back("manifest: " + manifest.fingerprint_hex());
  out.push_back("tool: lcsim " + std::string(kVersion));
  out.push_back("runs per arm: " + std::to_string(manifest.n_runs));
  return out;
}

void write_arm_outputs(const std::string& out_dir,
                       const TrainConfig& base_config,
                       const std::vector<Arm>& arms, int n_runs, int save_runs,
                       int threads, const std::string& csv_name,
                       const ExperimentManifest& manifest) {
  std::vector<std::string> comments = csv_comments(manifest);
  std::vector<std::pair<std::string, AggregateTrajectory>> aggregates;
  for (const Arm& arm : arms) {
    TrainConfig config = base_config;
    config.noise = arm.noise;
    comments.push_back(arm_summary(arm.name, config));
    std::vector<Trajectory> runs = run_ensemble(config, n_runs, threads);
    for (int r = 0; r < save_runs && r < n_runs; ++r) {
      char name[64];
      snprintf(name, sizeof name, "run_%s_%03d.csv", arm.name.c_str(), r);
      std::vector<std::string> run_comments = csv_comments(manifest);
      run_comments.push_back(arm_summary(arm.name, config));
      run_comments.push_back("run: " + std::to_string(r));
      write_trajectory_csv(out_dir + "/" + name, runs[static_cast<size_t>(r)],
                           run_comments);
    }
    aggregates.emplace_back(arm.name, aggregate_trajectories(runs));
  }

  std::vector<NamedAggregate> named;
  named.reserve(aggregates.size());
  for (const auto& [name, agg] : aggregates) named.push_back({name, &agg});
  write_aggregate_csv(out_dir + "/" + csv_name, named, comments);
}

}  // namespace

int cmd_simulate(const SimulateOptions& options, const GlobalOptions& global) {
  nlohmann::json doc = load_json_file(options.config_path);

  int n_runs = 1;
  if (doc.contains("n_runs")) {
    n_runs = doc.at("n_runs").get<int>();
    doc.erase("n_runs");
  }
  if (options.runs) n_runs = *options.runs;
  if (n_runs < 1) {
    throw std::invalid_argument("n_runs must be >= 1");
  }

  std::string name = "simulate";
  if (doc.contains("name")) {
    name = doc.at("name").get<std::string>();
    doc.erase("name");
  }

  nlohmann::json arms_json;
  if (doc.contains("arms")) {
    arms_json = doc.at("arms");
    doc.erase("arms");
  }

  TrainConfig base = train_config_from_json(doc);
  if (global.seed) base.seed = *global.seed;
  if (options.alpha1) {
    if (!(*options.alpha1 >= 0.0 && *options.alpha1 <= 1.0)) {
      throw std::invalid_argument("--alpha1 must lie in [0, 1]");
    }
    std::vector<double> alpha = base.spec.correlations();
    alpha[0] = *options.alpha1;
    base.spec = FeatureSpec(base.spec.feature_count(), base.spec.ambient_dim(),
                            base.spec.directions(), std::move(alpha));
  }

  std::vector<Arm> arms;
  if (arms_json.is_null()) {
    arms.push_back({"main", base.noise});
  } else {
    for (const auto& [arm_name, schedule] : arms_json.items()) {
      arms.push_back({arm_name,
                      schedule.is_null()
                          ? NoiseSchedule::none()
                          : noise_schedule_from_json(
                                schedule, base.spec.feature_count())});
    }
  }

  ExperimentManifest manifest{name, kVersion, n_runs, {}, utc_timestamp()};
  for (const Arm& arm : arms) {
    TrainConfig config = base;
    config.noise = arm.noise;
    config.validate();
    manifest.arm_configs.emplace_back(arm.name, train_config_to_json(config));
  }

  ensure_dir(global.out_dir);
  write_arm_outputs(global.out_dir, base, arms, n_runs, options.save_runs,
                    global.threads, "aggregate.csv", manifest);
  write_manifest(manifest, global.out_dir);
  printf("wrote %s/aggregate.csv (%zu arm(s) x %d run(s)), manifest %s\n",
         global.out_dir.c_str(), arms.size(), n_runs,
         manifest.fingerprint_hex().c_str());
  return 0;
}

namespace {

// The experiment grid: one weak feature against 50 fully correlated ones,
// noise arm destroys the view signal of features 2..51 from iteration 50.
// eta/lambda were tuned once so that by t = 150 the noise arm has clearly
// overtaken on the weak feature while the dominant features stay aligned,
// then frozen here.
TrainConfig appendix_config(double alpha1, bool noise_arm, uint64_t seed) {
  std::vector<double> alpha(51, 1.0);
  alpha[0] = alpha1;
  TrainConfig config(
      FeatureSpec::with_random_directions(51, 5, std::move(alpha), 20260814));
  config.eta = 0.0025;
  config.lambda = 0.01;
  config.m = 25;
  config.iterations = 150;
  config.init_scale = 0.1;
  config.seed = seed;
  if (noise_arm) {
    std::vector<int> targets;
    for (int k = 1; k < 51; ++k) targets.push_back(k);
    config.noise = NoiseSchedule::uniform(std::move(targets), 0.0, 50);
  }
  return config;
}

Series collect_series(const CsvTable& table, const std::string& arm, int k,
                      const char* value_column, const char* stderr_column) {
  const int c_arm = table.column("arm");
  const int c_it = table.column("iteration");
  const int c_k = table.column("k");
  const int c_val = table.column(value_column);
  const int c_se = table.column(stderr_column);
  if (c_arm < 0 || c_it < 0 || c_k < 0 || c_val < 0 || c_se < 0) {
    throw std::runtime_error("aggregate CSV is missing expected columns");
  }
  Series s;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    if (table.cell(r, c_arm) != arm) continue;
    if (static_cast<int>(table.num(r, c_k)) != k) continue;
    s.x.push_back(table.num(r, c_it));
    s.y.push_back(table.num(r, c_val));
    s.yerr.push_back(table.num(r, c_se));
  }
  return s;
}

// Plots are rendered from the CSV, not from in-memory results: the CSV is
// the artifact of record.
void render_appendix_plots(const std::string& csv_path, double alpha1,
                           const std::string& out_dir) {
  const CsvTable table = read_csv(csv_path);
  const std::string tag = format_double(alpha1);

  auto angle = [&](const std::string& arm, int k) {
    return collect_series(table, arm, k, "angle_rad_mean", "angle_rad_stderr");
  };
  Series f1_clean = angle("no_noise", 0);
  f1_clean.label = "feature 1, no noise";
  f1_clean.color = "#1f77b4";
  Series f1_noise = angle("noise", 0);
  f1_noise.label = "feature 1, noise";
  f1_noise.color = "#1f77b4";
  f1_noise.dashed = true;
  Series f2_clean = angle("no_noise", 1);
  f2_clean.label = "feature 2, no noise";
  f2_clean.color = "#d62728";
  Series f2_noise = angle("noise", 1);
  f2_noise.label = "feature 2, noise";
  f2_noise.color = "#d62728";
  f2_noise.dashed = true;

  PlotSpec alignment;
  alignment.title = "alignment, alpha_1 = " + tag;
  alignment.x_label = "iteration";
  alignment.y_label = "alignment angle (rad)";
  write_text_file(
      out_dir + "/alignment_alpha_" + tag + ".svg",
      render_line_plot(alignment, {f1_clean, f1_noise, f2_clean, f2_noise}));

  auto prob = [&](const std::string& arm) {
    return collect_series(table, arm, 0, "p_correct_mean", "p_correct_stderr");
  };
  Series p_clean = prob("no_noise");
  p_clean.label = "no noise";
  p_clean.color = "#1f77b4";
  Series p_noise = prob("noise");
  p_noise.label = "noise";
  p_noise.color = "#d62728";
  p_noise.dashed = true;

  PlotSpec probability;
  probability.title = "correct-pair probability, alpha_1 = " + tag;
  probability.x_label = "iteration";
  probability.y_label = "P(correct pair)";
  probability.y_max = 1.0;
  write_text_file(out_dir + "/p_correct_alpha_" + tag + ".svg",
                  render_line_plot(probability, {p_clean, p_noise}));
}

}  // namespace

int cmd_reproduce_appendix_e(const GlobalOptions& global,
                             std::optional<int> runs_override) {
  const double alphas[] = {0.125, 0.25, 0.375, 0.5};
  const int n_runs = runs_override.value_or(200);
  if (n_runs < 1) {
    throw std::invalid_argument("--runs must be >= 1");
  }
  const uint64_t seed = global.seed.value_or(5150);
  ensure_dir(global.out_dir);

  ExperimentManifest manifest{"appendix-e", kVersion, n_runs, {},
                              utc_timestamp()};
  for (double a1 : alphas) {
    for (int noisy = 0; noisy < 2; ++noisy) {
      manifest.arm_configs.emplace_back(
          "alpha_" + format_double(a1) + (noisy ? "/noise" : "/no_noise"),
          train_config_to_json(appendix_config(a1, noisy != 0, seed)));
    }
  }
  write_manifest(manifest, global.out_dir);

  for (double a1 : alphas) {
    const TrainConfig base = appendix_config(a1, false, seed);
    const TrainConfig noisy = appendix_config(a1, true, seed);
    const std::vector<Arm> arms = {{"no_noise", base.noise},
                                   {"noise", noisy.noise}};
    const std::string csv_name =
        "appendix_e_alpha_" + format_double(a1) + ".csv";
    // aggregate CSVs and figures are the artifacts here; per-run
    // trajectories are a `simulate` feature.
    write_arm_outputs(global.out_dir, base, arms, n_runs, /*save_runs=*/0,
                      global.threads, csv_name, manifest);
    render_appendix_plots(global.out_dir + "/" + csv_name, a1, global.out_dir);
    printf("alpha_1 = %-5s done (2 arms x %d runs)\n", format_double(a1).c_str(),
           n_runs);
  }
  printf("outputs in %s (manifest %s)\n", global.out_dir.c_str(),
         manifest.fingerprint_hex().c_str());
  return 0;
}

int cmd_check(const std::string& what, const std::string& config_path,
              const GlobalOptions& global) {
  const nlohmann::json o = config_path.empty()
                               ? nlohmann::json::object()
                               : load_json_file(config_path);
  nlohmann::json report;
  std::string text;
  bool pass = false;

  if (what == "grad") {
    reject_unknown_keys(o, {"step", "tolerance", "seed"});
    GradSuiteConfig config;
    config.step = o.value("step", config.step);
    config.tolerance = o.value("tolerance", config.tolerance);
    config.seed = o.value("seed", config.seed);
    if (global.seed) config.seed = *global.seed;
    const GradSuiteReport suite = run_grad_suite(config);
    report = grad_suite_to_json(suite);
    text = grad_suite_to_text(suite);
    pass = suite.pass;
  } else if (what == "downstream") {
    reject_unknown_keys(
        o, {"ambient_dim", "n_thetas", "n_samples", "tolerance", "seed"});
    DownstreamSuiteConfig config;
    config.ambient_dim = o.value("ambient_dim", config.ambient_dim);
    config.n_thetas = o.value("n_thetas", config.n_thetas);
    config.n_samples = o.value("n_samples", config.n_samples);
    config.tolerance = o.value("tolerance", config.tolerance);
    config.seed = o.value("seed", config.seed);
    if (global.seed) config.seed = *global.seed;
    config.threads = global.threads;
    const DownstreamSuiteReport suite = run_downstream_suite(config);
    report = downstream_suite_to_json(suite);
    text = downstream_suite_to_text(suite);
    pass = suite.pass;
  } else if (what == "theorem") {
    reject_unknown_keys(o, {"n_batches", "seed", "z_threshold"});
    TheoremSuiteConfig config;
    config.n_batches = o.value("n_batches", config.n_batches);
    config.seed = o.value("seed", config.seed);
    config.z_threshold = o.value("z_threshold", config.z_threshold);
    if (global.seed) config.seed = *global.seed;
    config.threads = global.threads;
    const TheoremSuiteReport suite = run_theorem_suite(config);
    report = theorem_suite_to_json(suite);
    text = theorem_suite_to_text(suite);
    pass = suite.pass;
  } else if (what == "limit") {
    reject_unknown_keys(o, {"n_instances", "feature_count", "ambient_dim", "m",
                            "eta", "n_halvings", "tolerance", "seed"});
    LimitSuiteConfig config;
    config.n_instances = o.value("n_instances", config.n_instances);
    config.feature_count = o.value("feature_count", config.feature_count);
    config.ambient_dim = o.value("ambient_dim", config.ambient_dim);
    config.m = o.value("m", config.m);
    config.eta = o.value("eta", config.eta);
    config.n_halvings = o.value("n_halvings", config.n_halvings);
    config.tolerance = o.value("tolerance", config.tolerance);
    config.seed = o.value("seed", config.seed);
    if (global.seed) config.seed = *global.seed;
    const LimitSuiteReport suite = run_limit_suite(config);
    report = limit_suite_to_json(suite);
    text = limit_suite_to_text(suite);
    pass = suite.pass;
  } else if (what == "weiner") {
    reject_unknown_keys(o, {"n_batches", "seed"});
    DerivativeSuiteConfig config;
    config.n_batches = o.value("n_batches", config.n_batches);
    config.seed = o.value("seed", config.seed);
    if (global.seed) config.seed = *global.seed;
    config.threads = global.threads;
    const DerivativeSuiteReport suite = run_derivative_suite(config);
    report = derivative_suite_to_json(suite);
    text = derivative_suite_to_text(suite);
    pass = suite.pass;
  } else {
    throw std::invalid_argument(
        "unknown check '" + what +
        "'; expected grad | downstream | theorem | limit | weiner");
  }

  ensure_dir(global.out_dir);
  const std::string report_path = global.out_dir + "/" + what + "_report.json";
  write_text_file(report_path, report.dump(2) + "\n");
  write_text_file(global.out_dir + "/" + what + "_report.txt", text);
  fputs(text.c_str(), stdout);
  if (!pass) {
    fprintf(stderr, "verification failed; report at %s\n", report_path.c_str());
    return 3;
  }
  return 0;
}

}  // namespace lcsim::cli
