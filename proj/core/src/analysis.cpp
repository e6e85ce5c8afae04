#include "lcsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lcsim/parallel.hpp"
#include "lcsim/stats.hpp"

namespace lcsim {

namespace {

std::string strfmt(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string strfmt(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

std::vector<double> normalized(std::vector<double> v) {
  const double n = std::sqrt(norm2(v));
  if (n == 0.0) throw std::invalid_argument("cannot normalize a zero vector");
  for (double& x : v) x /= n;
  return v;
}

}  // namespace

std::optional<double> alignment_angle(std::span<const double> theta,
                                      std::span<const double> mu) {
  const double norm = std::sqrt(norm2(theta));
  if (norm == 0.0) return std::nullopt;
  const double ratio = std::min(1.0, std::abs(dot(mu, theta)) / norm);
  return std::acos(ratio);
}

double downstream_error(double angle_radians) {
  return angle_radians / std::acos(-1.0);
}

double downstream_error_empirical(std::span<const double> theta,
                                  std::span<const double> mu,
                                  int64_t n_samples, const RngStream& rng,
                                  int threads) {
  if (n_samples < 1) {
    throw std::invalid_argument("downstream check: n_samples must be >= 1");
  }
  if (theta.size() != mu.size()) {
    throw std::invalid_argument("downstream check: dimension mismatch");
  }
  const int d = static_cast<int>(theta.size());
  const double orient = dot(mu, theta) < 0.0 ? -1.0 : 1.0;

  constexpr int64_t kChunk = 1 << 16;
  const int64_t n_chunks = (n_samples + kChunk - 1) / kChunk;
  std::vector<int64_t> mismatches(static_cast<size_t>(n_chunks), 0);

  parallel_for(n_chunks, threads, [&](int64_t c) {
    RngStream stream = rng.child(StreamPurpose::kChunk, static_cast<uint64_t>(c));
    const int64_t lo = c * kChunk;
    const int64_t hi = std::min(n_samples, lo + kChunk);
    std::vector<double> u(static_cast<size_t>(d));
    int64_t bad = 0;
    for (int64_t i = lo; i < hi; ++i) {
      stream.fill_normal(u);
      const double label = dot(mu, u) < 0.0 ? -1.0 : 1.0;
      const double pred = (dot(theta, u) < 0.0 ? -1.0 : 1.0) * orient;
      if (label != pred) ++bad;
    }
    mismatches[static_cast<size_t>(c)] = bad;
  });

  int64_t total = 0;
  for (int64_t b : mismatches) total += b;
  return static_cast<double>(total) / static_cast<double>(n_samples);
}

Mat finite_difference_grad(const ModelParams& params, const PairBatch& batch,
                           double step, const EvalOptions& opts) {
  if (!(step > 0.0)) {
    throw std::invalid_argument("finite difference step must be > 0");
  }
  Mat out(params.feature_count(), params.ambient_dim());
  ModelParams probe = params;
  for (int k = 0; k < params.feature_count(); ++k) {
    for (int c = 0; c < params.ambient_dim(); ++c) {
      const double saved = probe.theta.at(k, c);
      probe.theta.at(k, c) = saved + step;
      const double up = loss(probe, batch, opts);
      probe.theta.at(k, c) = saved - step;
      const double down = loss(probe, batch, opts);
      probe.theta.at(k, c) = saved;
      out.at(k, c) = (up - down) / (2.0 * step);
    }
  }
  return out;
}

TheoremAssumptions theorem_assumptions(const ModelParams& params,
                                       const FeatureSpec& spec, int k,
                                       int k_prime, double constant,
                                       bool literal_mu_k) {
  if (k == k_prime || k < 0 || k_prime < 0 || k >= spec.feature_count() ||
      k_prime >= spec.feature_count()) {
    throw std::invalid_argument("assumption check: bad feature indices");
  }
  if (!(constant > 0.0)) {
    throw std::invalid_argument("assumption check: constant must be > 0");
  }
  const auto theta_k = params.row(k);
  const auto theta_kp = params.row(k_prime);
  const double a_k = spec.correlation(k);
  const double a_kp = spec.correlation(k_prime);
  const double slack = (1.0 - a_kp * a_kp) / constant;

  TheoremAssumptions out;
  out.constant = constant;
  out.weak_alignment_small =
      std::abs(dot(theta_k, spec.direction(k))) <=
      slack * std::sqrt(norm2(theta_k));
  const auto strong_dir = spec.direction(literal_mu_k ? k : k_prime);
  out.strong_feature_learned =
      std::pow(norm2(theta_kp), 1.5) <= std::abs(dot(theta_kp, strong_dir));
  out.weak_norm_small = norm2(theta_k) <= a_k * slack;
  return out;
}

TheoremCheckReport one_step_noise_comparison(const ModelParams& params,
                                             const FeatureSpec& spec,
                                             const OneStepComparisonConfig& config) {
  const int K = spec.feature_count();
  if (config.k == config.k_prime || config.k < 0 || config.k_prime < 0 ||
      config.k >= K || config.k_prime >= K) {
    throw std::invalid_argument("one-step comparison: bad feature indices");
  }
  if (params.feature_count() != K || params.ambient_dim() != spec.ambient_dim()) {
    throw std::invalid_argument("one-step comparison: params do not match spec");
  }
  if (!(config.beta >= 0.0 && config.beta < 1.0)) {
    throw std::invalid_argument("one-step comparison: beta must lie in [0, 1)");
  }
  if (!(config.eta > 0.0) || config.m < 1 || config.n_batches < 2) {
    throw std::invalid_argument("one-step comparison: need eta > 0, m >= 1, n >= 2");
  }
  if (!alignment_angle(params.row(config.k), spec.direction(config.k))) {
    throw std::invalid_argument("one-step comparison: theta_k is zero");
  }

  const NoiseSchedule schedule =
      NoiseSchedule::uniform({config.k_prime}, config.beta, 0);
  const RngStream root(config.seed);
  const auto mu_k = spec.direction(config.k);
  const auto theta_k = params.row(config.k);
  const int d = spec.ambient_dim();

  constexpr int64_t kChunk = 256;
  const int64_t n = config.n_batches;
  const int64_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<RunningSums> sums(static_cast<size_t>(n_chunks));

  parallel_for(n_chunks, config.threads, [&](int64_t c) {
    RunningSums local;
    std::vector<double> stepped(static_cast<size_t>(d));
    const int64_t lo = c * kChunk;
    const int64_t hi = std::min(n, lo + kChunk);
    for (int64_t i = lo; i < hi; ++i) {
      RngStream batch_stream =
          root.child(StreamPurpose::kBatch, static_cast<uint64_t>(i));
      RngStream noise_stream =
          root.child(StreamPurpose::kNoise, static_cast<uint64_t>(i));
      const PairBatch clean = sample_batch(spec, config.m, batch_stream);
      const PairBatch noisy = add_noise(clean, schedule, spec, noise_stream);

      double angle[2];
      const PairBatch* arms[2] = {&clean, &noisy};
      for (int a = 0; a < 2; ++a) {
        const Mat grad = grad_closed_form(params, *arms[a]);
        const auto g = grad.row(config.k);
        for (int x = 0; x < d; ++x) {
          stepped[x] =
              theta_k[x] - config.eta * (g[x] + config.lambda * theta_k[x]);
        }
        angle[a] = alignment_angle(stepped, mu_k).value();
      }
      // positive when the noisy step aligns theta_k more.
      local.add(angle[0] - angle[1]);
    }
    sums[static_cast<size_t>(c)] = local;
  });

  RunningSums total;
  for (const RunningSums& s : sums) total.merge(s);

  TheoremCheckReport report;
  report.config = config;
  for (double constant : config.assumption_constants) {
    report.assumptions.push_back(theorem_assumptions(
        params, spec, config.k, config.k_prime, constant, config.literal_mu_k));
  }
  report.n = total.n;
  report.mean_delta = total.mean();
  report.stderr_delta = total.stderror();
  report.z_score = z_score(total);
  if (report.z_score > 3.0 && report.mean_delta > 0.0) {
    report.verdict = "consistent";
  } else if (report.z_score < -3.0) {
    report.verdict = "inconsistent";
  } else {
    report.verdict = "inconclusive";
  }
  return report;
}

LimitCheckReport limit_lemma_check(const ModelParams& params,
                                   const PairBatch& batch,
                                   const FeatureSpec& spec, int k,
                                   std::span<const double> eta_sequence) {
  if (k < 0 || k >= spec.feature_count()) {
    throw std::invalid_argument("limit check: feature index out of range");
  }
  if (eta_sequence.empty()) {
    throw std::invalid_argument("limit check: need at least one eta");
  }
  const auto theta = params.row(k);
  const auto mu = spec.direction(k);
  const double norm = std::sqrt(norm2(theta));
  if (norm == 0.0) {
    throw std::invalid_argument("limit check: theta_k is zero");
  }
  const double mt = dot(mu, theta);
  const double ratio = std::abs(mt) / norm;
  if (ratio <= 1e-12 || ratio >= 1.0 - 1e-12) {
    throw std::invalid_argument(strfmt(
        "limit check: alignment ratio %.17g is too close to 0 or 1; the "
        "angle derivative is singular there",
        ratio));
  }

  const Mat grad = grad_closed_form(params, batch);
  const auto g = grad.row(k);
  const double mg = dot(mu, g);
  const double tg = dot(theta, g);
  const double n_factor = -1.0 / (std::sqrt(1.0 - ratio * ratio) * norm *
                                  std::abs(mt));

  LimitCheckReport report;
  report.ratio = ratio;
  report.analytic = n_factor * (-mt * mg + tg * mt * mt / (norm * norm));

  const double base_angle = std::acos(ratio);
  std::vector<double> stepped(theta.size());
  for (double eta : eta_sequence) {
    if (!(eta > 0.0)) {
      throw std::invalid_argument("limit check: etas must be > 0");
    }
    for (size_t x = 0; x < stepped.size(); ++x) {
      stepped[x] = theta[x] - eta * g[x];
    }
    const auto angle = alignment_angle(stepped, mu);
    if (!angle) {
      throw std::invalid_argument("limit check: step annihilated theta_k");
    }
    const double quotient = (*angle - base_angle) / eta;
    report.etas.push_back(eta);
    report.quotients.push_back(quotient);
    report.deviations.push_back(std::abs(quotient - report.analytic) /
                                std::max(std::abs(report.analytic), 1e-12));
  }
  return report;
}

DerivativeCheckReport gradient_derivative_check(const ModelParams& params,
                                                const FeatureSpec& spec,
                                                const DerivativeCheckConfig& config) {
  const int K = spec.feature_count();
  const int d = spec.ambient_dim();
  if (config.k == config.k_prime || config.k < 0 || config.k_prime < 0 ||
      config.k >= K || config.k_prime >= K) {
    throw std::invalid_argument("derivative check: bad feature indices");
  }
  if (params.feature_count() != K || params.ambient_dim() != d) {
    throw std::invalid_argument("derivative check: params do not match spec");
  }
  if (!(config.dx > 0.0) || !(config.x0 - config.dx > 0.0) ||
      !(config.x0 + config.dx < 1.0)) {
    throw std::invalid_argument(
        "derivative check: need 0 < x0 - dx and x0 + dx < 1 (the closed form "
        "is singular at x = 1)");
  }
  if (config.m < 1 || config.n_batches < 2) {
    throw std::invalid_argument("derivative check: need m >= 1, n >= 2");
  }

  const RngStream root(config.seed);
  const auto theta_k = params.row(config.k);
  const auto theta_kp = params.row(config.k_prime);
  const auto mu_kp = spec.direction(config.k_prime);
  const double pref_scale =
      -dot(theta_kp, mu_kp) / (1.0 - config.x0 * config.x0);

  constexpr int64_t kChunk = 64;
  const int64_t n = config.n_batches;
  const int64_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<std::vector<RunningSums>> fd_sums(
      static_cast<size_t>(n_chunks),
      std::vector<RunningSums>(static_cast<size_t>(d)));
  std::vector<std::vector<RunningSums>> rhs_sums = fd_sums;

  parallel_for(n_chunks, config.threads, [&](int64_t c) {
    std::vector<RunningSums> fd_local(static_cast<size_t>(d));
    std::vector<RunningSums> rhs_local(static_cast<size_t>(d));
    std::vector<double> rhs(static_cast<size_t>(d));
    Mat z, p;
    const int64_t lo = c * kChunk;
    const int64_t hi = std::min(n, lo + kChunk);
    for (int64_t i = lo; i < hi; ++i) {
      RngStream stream =
          root.child(StreamPurpose::kBatch, static_cast<uint64_t>(i));
      const BatchDraws draws = sample_batch_draws(spec, config.m, stream);
      const PairBatch up =
          draws.materialize_with(spec, config.k_prime, config.x0 + config.dx);
      const PairBatch down =
          draws.materialize_with(spec, config.k_prime, config.x0 - config.dx);
      const PairBatch mid =
          draws.materialize_with(spec, config.k_prime, config.x0);

      const Mat g_up = grad_closed_form(params, up);
      const Mat g_down = grad_closed_form(params, down);
      for (int x = 0; x < d; ++x) {
        fd_local[static_cast<size_t>(x)].add(
            (g_up.at(config.k, x) - g_down.at(config.k, x)) /
            (2.0 * config.dx));
      }

      similarity_and_logits(params, mid, z, p);
      std::fill(rhs.begin(), rhs.end(), 0.0);
      for (int a = 0; a < config.m; ++a) {
        const auto u_kp = mid.anchor_row(a, config.k_prime);
        const auto v_kp = mid.view_row(a, config.k_prime);
        const auto u_k = mid.anchor_row(a, config.k);
        const auto v_k_a = mid.view_row(a, config.k);
        const double s_a = dot(theta_kp, u_kp);
        const double t_a = dot(mu_kp, u_kp) - config.x0 * dot(mu_kp, v_kp);
        const double w_a = p.at(a, a) * s_a * t_a * pref_scale;
        const double u_theta = dot(u_k, theta_k);
        for (int b = 0; b < config.m; ++b) {
          if (b == a) continue;
          const auto v_k_b = mid.view_row(b, config.k);
          double dv_theta = 0.0;
          for (int x = 0; x < d; ++x) {
            dv_theta += (v_k_b[x] - v_k_a[x]) * theta_k[x];
          }
          const double w = w_a * p.at(a, b);
          for (int x = 0; x < d; ++x) {
            rhs[static_cast<size_t>(x)] +=
                w * (u_k[x] * dv_theta + (v_k_b[x] - v_k_a[x]) * u_theta);
          }
        }
      }
      for (int x = 0; x < d; ++x) {
        rhs_local[static_cast<size_t>(x)].add(rhs[static_cast<size_t>(x)]);
      }
    }
    fd_sums[static_cast<size_t>(c)] = std::move(fd_local);
    rhs_sums[static_cast<size_t>(c)] = std::move(rhs_local);
  });

  DerivativeCheckReport report;
  report.config = config;
  report.fd_mean.resize(d);
  report.fd_stderr.resize(d);
  report.rhs_mean.resize(d);
  report.rhs_stderr.resize(d);
  report.intervals_overlap = true;
  for (int x = 0; x < d; ++x) {
    RunningSums fd, rhs;
    for (int64_t c = 0; c < n_chunks; ++c) {
      fd.merge(fd_sums[static_cast<size_t>(c)][static_cast<size_t>(x)]);
      rhs.merge(rhs_sums[static_cast<size_t>(c)][static_cast<size_t>(x)]);
    }
    report.n = fd.n;
    report.fd_mean[x] = fd.mean();
    report.fd_stderr[x] = fd.stderror();
    report.rhs_mean[x] = rhs.mean();
    report.rhs_stderr[x] = rhs.stderror();
    const bool overlap =
        std::abs(report.fd_mean[x] - report.rhs_mean[x]) <=
        1.96 * (report.fd_stderr[x] + report.rhs_stderr[x]);
    report.intervals_overlap = report.intervals_overlap && overlap;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Suites.

GradSuiteReport run_grad_suite(const GradSuiteConfig& config) {
  GradSuiteReport report;
  report.config = config;
  const RngStream root(config.seed);

  const int Ks[] = {1, 2, 5};
  const int ds[] = {1, 3, 8};
  const int ms[] = {1, 2, 10};
  uint64_t index = 0;
  for (int K : Ks) {
    for (int d : ds) {
      for (int m : ms) {
        RngStream stream = root.child(StreamPurpose::kMisc, index++);
        std::vector<double> alpha(static_cast<size_t>(K));
        for (double& a : alpha) a = stream.uniform();
        const FeatureSpec spec = FeatureSpec::with_random_directions(
            K, d, alpha, stream.next_u64());
        ModelParams params(K, d);
        stream.fill_normal(params.theta.v);
        const PairBatch batch = sample_batch(spec, m, stream);

        const Mat fd = finite_difference_grad(params, batch, config.step);
        const Mat closed = grad_closed_form(params, batch);
        double num = 0.0, den = 1.0;
        for (size_t i = 0; i < fd.v.size(); ++i) {
          num = std::max(num, std::abs(closed.v[i] - fd.v[i]));
          den = std::max(den, std::abs(fd.v[i]));
        }
        report.instances.push_back({K, d, m, num / den});
        report.max_rel_err = std::max(report.max_rel_err, num / den);
      }
    }
  }
  report.pass = report.max_rel_err < config.tolerance;
  return report;
}

DownstreamSuiteReport run_downstream_suite(const DownstreamSuiteConfig& config) {
  if (config.ambient_dim < 2 || config.n_thetas < 2) {
    throw std::invalid_argument("downstream suite: need d >= 2, n_thetas >= 2");
  }
  DownstreamSuiteReport report;
  report.config = config;
  const RngStream root(config.seed);
  RngStream setup = root.child(StreamPurpose::kMisc, 0);

  const int d = config.ambient_dim;
  std::vector<double> mu(static_cast<size_t>(d));
  setup.fill_normal(mu);
  mu = normalized(std::move(mu));

  for (int t = 0; t < config.n_thetas; ++t) {
    std::vector<double> theta(static_cast<size_t>(d));
    if (t == 0) {
      theta = mu;  // angle 0, error 0
    } else if (t == 1) {
      // orthogonal to mu: error 1/2
      setup.fill_normal(theta);
      const double proj = dot(theta, mu);
      for (int x = 0; x < d; ++x) theta[static_cast<size_t>(x)] -= proj * mu[static_cast<size_t>(x)];
      theta = normalized(std::move(theta));
    } else {
      setup.fill_normal(theta);
    }
    const double angle = alignment_angle(theta, mu).value();
    const double closed = downstream_error(angle);
    const double empirical = downstream_error_empirical(
        theta, mu, config.n_samples,
        root.child(StreamPurpose::kRun, static_cast<uint64_t>(t)),
        config.threads);
    report.instances.push_back({angle, closed, empirical});
    report.max_abs_err =
        std::max(report.max_abs_err, std::abs(closed - empirical));
  }
  report.pass = report.max_abs_err < config.tolerance;
  return report;
}

FeatureSpec theorem_suite_spec() {
  return FeatureSpec::with_random_directions(2, 5, {0.5, 0.9}, 1730);
}

FeatureSpec theorem_suite_control_spec() {
  // Same directions, but the strong feature carries no view correlation, so
  // resampling it leaves the batch distribution unchanged.
  return FeatureSpec::with_random_directions(2, 5, {0.5, 0.0}, 1730);
}

ModelParams theorem_suite_params(const FeatureSpec& spec) {
  const int d = spec.ambient_dim();
  ModelParams params(2, d);
  // theta_0: norm 0.05, cosine ~ 0.01 against mu_0. theta_1 = 0.3 mu_1.
  // Satisfies all three one-step inequalities at C = 10 for both the
  // canonical and the control correlations.
  const auto mu0 = spec.direction(0);
  const auto q0 = spec.complement_vector(0, 0);
  std::vector<double> t0(static_cast<size_t>(d));
  for (int x = 0; x < d; ++x) t0[static_cast<size_t>(x)] = q0[x] + 0.01 * mu0[x];
  t0 = normalized(std::move(t0));
  for (int x = 0; x < d; ++x) params.theta.at(0, x) = 0.05 * t0[static_cast<size_t>(x)];
  const auto mu1 = spec.direction(1);
  for (int x = 0; x < d; ++x) params.theta.at(1, x) = 0.3 * mu1[x];
  return params;
}

TheoremSuiteReport run_theorem_suite(const TheoremSuiteConfig& config) {
  TheoremSuiteReport report;
  report.config = config;

  OneStepComparisonConfig check;
  check.n_batches = config.n_batches;
  check.threads = config.threads;
  check.seed = config.seed;

  const FeatureSpec spec = theorem_suite_spec();
  const ModelParams params = theorem_suite_params(spec);
  report.canonical = one_step_noise_comparison(params, spec, check);

  check.seed = config.seed + 1;
  const FeatureSpec control_spec = theorem_suite_control_spec();
  report.control =
      one_step_noise_comparison(theorem_suite_params(control_spec),
                                control_spec, check);

  // assumption_constants[1] is C = 10.
  report.pass = report.canonical.assumptions[1].all() &&
                report.canonical.mean_delta > 0.0 &&
                report.canonical.z_score > config.z_threshold &&
                std::abs(report.control.z_score) < config.z_threshold;
  return report;
}

LimitSuiteReport run_limit_suite(const LimitSuiteConfig& config) {
  if (config.n_instances < 1 || config.n_halvings < 0 || !(config.eta > 0.0)) {
    throw std::invalid_argument("limit suite: bad configuration");
  }
  LimitSuiteReport report;
  report.config = config;
  const RngStream root(config.seed);

  std::vector<double> etas;
  for (int h = config.n_halvings; h >= 0; --h) {
    etas.push_back(config.eta * static_cast<double>(1 << h));
  }

  for (int i = 0; i < config.n_instances; ++i) {
    RngStream stream = root.child(StreamPurpose::kMisc, static_cast<uint64_t>(i));
    const int K = config.feature_count;
    const int d = config.ambient_dim;
    std::vector<double> alpha(static_cast<size_t>(K));
    for (double& a : alpha) a = stream.uniform();
    const FeatureSpec spec =
        FeatureSpec::with_random_directions(K, d, alpha, stream.next_u64());

    // Redraw until the checked row is safely away from the ratio endpoints.
    ModelParams params(K, d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (int attempt = 0;; ++attempt) {
      stream.fill_normal(params.theta.v);
      for (double& x : params.theta.v) x *= scale;
      const double ratio =
          std::abs(dot(spec.direction(0), params.row(0))) /
          std::sqrt(norm2(params.row(0)));
      if (ratio > 0.05 && ratio < 0.95) break;
      if (attempt > 200) {
        throw std::runtime_error("limit suite: could not place theta_0");
      }
    }
    const PairBatch batch = sample_batch(spec, config.m, stream);
    report.instances.push_back(
        limit_lemma_check(params, batch, spec, 0, etas));
    report.max_deviation = std::max(report.max_deviation,
                                    report.instances.back().deviations.back());
  }
  report.pass = report.max_deviation < config.tolerance;
  return report;
}

FeatureSpec derivative_suite_spec() {
  return FeatureSpec::with_random_directions(2, 3, {0.8, 0.5}, 7151);
}

ModelParams derivative_suite_params(const FeatureSpec& spec) {
  const int d = spec.ambient_dim();
  ModelParams params(2, d);
  for (int x = 0; x < d; ++x) {
    params.theta.at(0, x) =
        0.4 * spec.direction(0)[x] + 0.2 * spec.complement_vector(0, 0)[x];
    params.theta.at(1, x) =
        0.5 * spec.direction(1)[x] + 0.1 * spec.complement_vector(1, 0)[x];
  }
  return params;
}

DerivativeSuiteReport run_derivative_suite(const DerivativeSuiteConfig& config) {
  DerivativeSuiteReport report;
  report.config = config;

  DerivativeCheckConfig check;
  check.n_batches = config.n_batches;
  check.seed = config.seed;
  check.threads = config.threads;

  const FeatureSpec spec = derivative_suite_spec();
  report.check = gradient_derivative_check(derivative_suite_params(spec), spec,
                                           check);
  report.pass = report.check.intervals_overlap;
  return report;
}

// ---------------------------------------------------------------------------
// Serialization.

namespace {

nlohmann::json assumptions_to_json(const TheoremAssumptions& a) {
  return {{"constant", a.constant},
          {"weak_alignment_small", a.weak_alignment_small},
          {"strong_feature_learned", a.strong_feature_learned},
          {"weak_norm_small", a.weak_norm_small},
          {"all", a.all()}};
}

}  // namespace

nlohmann::json theorem_report_to_json(const TheoremCheckReport& report) {
  nlohmann::json assumptions = nlohmann::json::array();
  for (const auto& a : report.assumptions) assumptions.push_back(assumptions_to_json(a));
  return {{"config",
           {{"k", report.config.k},
            {"k_prime", report.config.k_prime},
            {"beta", report.config.beta},
            {"eta", report.config.eta},
            {"lambda", report.config.lambda},
            {"m", report.config.m},
            {"n_batches", report.config.n_batches},
            {"seed", report.config.seed},
            {"literal_mu_k", report.config.literal_mu_k}}},
          {"assumptions", assumptions},
          {"n", report.n},
          {"mean_delta", report.mean_delta},
          {"stderr_delta", report.stderr_delta},
          {"z_score", report.z_score},
          {"verdict", report.verdict}};
}

nlohmann::json derivative_report_to_json(const DerivativeCheckReport& report) {
  return {{"config",
           {{"k", report.config.k},
            {"k_prime", report.config.k_prime},
            {"x0", report.config.x0},
            {"dx", report.config.dx},
            {"m", report.config.m},
            {"n_batches", report.config.n_batches},
            {"seed", report.config.seed}}},
          {"n", report.n},
          {"fd_mean", report.fd_mean},
          {"fd_stderr", report.fd_stderr},
          {"rhs_mean", report.rhs_mean},
          {"rhs_stderr", report.rhs_stderr},
          {"intervals_overlap", report.intervals_overlap}};
}

nlohmann::json limit_report_to_json(const LimitCheckReport& report) {
  return {{"ratio", report.ratio},
          {"analytic", report.analytic},
          {"etas", report.etas},
          {"quotients", report.quotients},
          {"deviations", report.deviations}};
}

nlohmann::json grad_suite_to_json(const GradSuiteReport& report) {
  nlohmann::json instances = nlohmann::json::array();
  for (const auto& i : report.instances) {
    instances.push_back({{"feature_count", i.feature_count},
                         {"ambient_dim", i.ambient_dim},
                         {"m", i.m},
                         {"max_rel_err", i.max_rel_err}});
  }
  return {{"check", "grad"},
          {"config",
           {{"step", report.config.step},
            {"tolerance", report.config.tolerance},
            {"seed", report.config.seed}}},
          {"instances", instances},
          {"max_rel_err", report.max_rel_err},
          {"pass", report.pass}};
}

nlohmann::json downstream_suite_to_json(const DownstreamSuiteReport& report) {
  nlohmann::json instances = nlohmann::json::array();
  for (const auto& i : report.instances) {
    instances.push_back({{"angle", i.angle},
                         {"closed_form", i.closed_form},
                         {"empirical", i.empirical}});
  }
  return {{"check", "downstream"},
          {"config",
           {{"ambient_dim", report.config.ambient_dim},
            {"n_thetas", report.config.n_thetas},
            {"n_samples", report.config.n_samples},
            {"tolerance", report.config.tolerance},
            {"seed", report.config.seed}}},
          {"instances", instances},
          {"max_abs_err", report.max_abs_err},
          {"pass", report.pass}};
}

nlohmann::json theorem_suite_to_json(const TheoremSuiteReport& report) {
  return {{"check", "theorem"},
          {"config",
           {{"n_batches", report.config.n_batches},
            {"seed", report.config.seed},
            {"z_threshold", report.config.z_threshold}}},
          {"canonical", theorem_report_to_json(report.canonical)},
          {"control", theorem_report_to_json(report.control)},
          {"pass", report.pass}};
}

nlohmann::json limit_suite_to_json(const LimitSuiteReport& report) {
  nlohmann::json instances = nlohmann::json::array();
  for (const auto& i : report.instances) instances.push_back(limit_report_to_json(i));
  return {{"check", "limit"},
          {"config",
           {{"n_instances", report.config.n_instances},
            {"feature_count", report.config.feature_count},
            {"ambient_dim", report.config.ambient_dim},
            {"m", report.config.m},
            {"eta", report.config.eta},
            {"n_halvings", report.config.n_halvings},
            {"tolerance", report.config.tolerance},
            {"seed", report.config.seed}}},
          {"instances", instances},
          {"max_deviation", report.max_deviation},
          {"pass", report.pass}};
}

nlohmann::json derivative_suite_to_json(const DerivativeSuiteReport& report) {
  return {{"check", "weiner"},
          {"config",
           {{"n_batches", report.config.n_batches},
            {"seed", report.config.seed}}},
          {"report", derivative_report_to_json(report.check)},
          {"pass", report.pass}};
}

// ---------------------------------------------------------------------------
// Text rendering.

namespace {

const char* pass_str(bool b) { return b ? "pass" : "FAIL"; }

std::string assumption_line(const TheoremAssumptions& a) {
  return strfmt("    C = %-5g alignment %-5s learned %-5s norm %-5s -> %s\n",
                a.constant, a.weak_alignment_small ? "ok" : "no",
                a.strong_feature_learned ? "ok" : "no",
                a.weak_norm_small ? "ok" : "no", a.all() ? "hold" : "violated");
}

std::string theorem_report_text(const char* name,
                                const TheoremCheckReport& r) {
  std::string out;
  out += strfmt("  %s: n = %lld  mean delta = %.6e  stderr = %.3e  z = %.2f  "
                "verdict = %s\n",
                name, static_cast<long long>(r.n), r.mean_delta,
                r.stderr_delta, r.z_score, r.verdict.c_str());
  for (const auto& a : r.assumptions) out += assumption_line(a);
  return out;
}

}  // namespace

std::string grad_suite_to_text(const GradSuiteReport& report) {
  std::string out = "gradient check: closed form vs central finite differences\n";
  for (const auto& i : report.instances) {
    out += strfmt("  K = %d  d = %d  m = %-2d  max rel err = %.3e\n",
                  i.feature_count, i.ambient_dim, i.m, i.max_rel_err);
  }
  out += strfmt("max over %zu instances: %.3e (tolerance %.1e) -> %s\n",
                report.instances.size(), report.max_rel_err,
                report.config.tolerance, pass_str(report.pass));
  return out;
}

std::string downstream_suite_to_text(const DownstreamSuiteReport& report) {
  std::string out = strfmt(
      "downstream check: angle/pi vs %lld-sample empirical error (d = %d)\n",
      static_cast<long long>(report.config.n_samples),
      report.config.ambient_dim);
  for (const auto& i : report.instances) {
    out += strfmt("  angle = %.4f  closed = %.6f  empirical = %.6f  |err| = %.2e\n",
                  i.angle, i.closed_form, i.empirical,
                  std::abs(i.closed_form - i.empirical));
  }
  out += strfmt("max abs err: %.2e (tolerance %.1e) -> %s\n",
                report.max_abs_err, report.config.tolerance,
                pass_str(report.pass));
  return out;
}

std::string theorem_suite_to_text(const TheoremSuiteReport& report) {
  std::string out = strfmt(
      "one-step noise comparison (paired, common draws, n = %lld)\n",
      static_cast<long long>(report.config.n_batches));
  out += "delta = angle after clean step - angle after noisy step; the claim\n"
         "is mean delta > 0 when the assumptions hold.\n";
  out += theorem_report_text("canonical (alpha' = 0.9)", report.canonical);
  out += theorem_report_text("control   (alpha' = 0.0)", report.control);
  out += strfmt("requires z > %.1f on canonical and |z| < %.1f on control -> %s\n",
                report.config.z_threshold, report.config.z_threshold,
                pass_str(report.pass));
  return out;
}

std::string limit_suite_to_text(const LimitSuiteReport& report) {
  std::string out = strfmt(
      "angle step limit check: difference quotient vs analytic derivative "
      "(%d instances)\n",
      report.config.n_instances);
  for (size_t i = 0; i < report.instances.size(); ++i) {
    const auto& r = report.instances[i];
    out += strfmt("  instance %zu: ratio = %.4f  analytic = %+.6e\n", i,
                  r.ratio, r.analytic);
    for (size_t j = 0; j < r.etas.size(); ++j) {
      out += strfmt("    eta = %.1e  quotient = %+.6e  rel dev = %.3e\n",
                    r.etas[j], r.quotients[j], r.deviations[j]);
    }
  }
  out += strfmt("max deviation at eta = %.1e: %.3e (tolerance %.1e) -> %s\n",
                report.config.eta, report.max_deviation,
                report.config.tolerance, pass_str(report.pass));
  return out;
}

std::string derivative_suite_to_text(const DerivativeSuiteReport& report) {
  const auto& r = report.check;
  std::string out = strfmt(
      "gradient derivative in view correlation: coupled FD vs closed form\n"
      "x0 = %g  dx = %g  m = %d  n = %lld\n",
      r.config.x0, r.config.dx, r.config.m, static_cast<long long>(r.n));
  for (size_t x = 0; x < r.fd_mean.size(); ++x) {
    out += strfmt(
        "  [%zu] fd = %+.6e +- %.2e   rhs = %+.6e +- %.2e\n", x,
        r.fd_mean[x], r.fd_stderr[x], r.rhs_mean[x], r.rhs_stderr[x]);
  }
  out += strfmt("95%% intervals overlap componentwise -> %s\n",
                pass_str(report.pass));
  return out;
}

}  // namespace lcsim
