#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lcsim/feature_space.hpp"
#include "lcsim/model.hpp"
#include "lcsim/rng.hpp"

#include <nlohmann/json_fwd.hpp>

namespace lcsim {

// Acute angle between theta and the line spanned by mu:
// arccos(|mu . theta| / |theta|), in [0, pi/2]. nullopt when theta == 0.
std::optional<double> alignment_angle(std::span<const double> theta,
                                      std::span<const double> mu);

// Closed-form test error of the induced sign classifier on a single feature:
// angle / pi. The label is sign(mu . u), the prediction sign(theta . u)
// corrected for orientation, and u' (mu, theta) is a centered Gaussian pair,
// so the disagreement mass is the angular wedge.
double downstream_error(double angle_radians);

// Monte-Carlo estimate of the same error from n independent anchors.
// Accumulates integer mismatch counts in fixed-size chunks so the result is
// independent of the thread count.
double downstream_error_empirical(std::span<const double> theta,
                                  std::span<const double> mu,
                                  int64_t n_samples, const RngStream& rng,
                                  int threads = 1);

// Central finite-difference gradient of the batch loss. Independent of the
// closed-form accumulation path; used to cross-check grad_closed_form.
Mat finite_difference_grad(const ModelParams& params, const PairBatch& batch,
                           double step, const EvalOptions& opts = {});

// The three inequalities, in order, that the one-step comparison assumes:
//   1. |theta_k . mu_k|   <= (1 - alpha_kp^2) / C * |theta_k|
//   2. |theta_kp|^3       <= |theta_kp . mu_kp|
//   3. |theta_k|^2        <= alpha_k (1 - alpha_kp^2) / C
// literal_mu_k swaps the direction in inequality 2 to mu_k, the other
// defensible reading of the stated condition.
struct TheoremAssumptions {
  bool weak_alignment_small = false;
  bool strong_feature_learned = false;
  bool weak_norm_small = false;
  double constant = 0.0;

  bool all() const {
    return weak_alignment_small && strong_feature_learned && weak_norm_small;
  }
};

TheoremAssumptions theorem_assumptions(const ModelParams& params,
                                       const FeatureSpec& spec, int k,
                                       int k_prime, double constant,
                                       bool literal_mu_k = false);

// Paired one-step comparison. For each sampled batch, take one GD step on the
// clean batch and one on a copy with feature k_prime noised to beta, and
// record delta = angle(theta_k after clean) - angle(theta_k after noisy).
// Positive mean delta means the noisy step aligns theta_k faster. Both arms
// share every draw, so delta has no between-arm sampling noise.
struct OneStepComparisonConfig {
  int k = 0;
  int k_prime = 1;
  double beta = 0.0;
  double eta = 1e-3;
  double lambda = 0.0;
  int m = 25;
  int64_t n_batches = 100000;
  uint64_t seed = 0x5eedc0de;
  int threads = 1;
  std::vector<double> assumption_constants = {5.0, 10.0, 50.0};
  bool literal_mu_k = false;
};

struct TheoremCheckReport {
  OneStepComparisonConfig config;
  std::vector<TheoremAssumptions> assumptions;  // one per constant
  int64_t n = 0;
  double mean_delta = 0.0;
  double stderr_delta = 0.0;
  double z_score = 0.0;
  // "consistent" when mean_delta > 0 with z > 3, "inconsistent" when the
  // effect is significantly negative, "inconclusive" otherwise.
  std::string verdict;
};

TheoremCheckReport one_step_noise_comparison(const ModelParams& params,
                                             const FeatureSpec& spec,
                                             const OneStepComparisonConfig& config);

// Fixed-batch limit identity: as eta -> 0,
//   (angle(theta_k - eta g_k) - angle(theta_k)) / eta
//     -> N * ( -(mu.theta)(mu.g) + (theta.g)(mu.theta)^2 / |theta|^2 )
// with N = -1 / (sqrt(1 - r^2) |theta| |mu.theta|), r = |mu.theta| / |theta|.
// Weight decay drops out of the limit, so g is the plain batch gradient.
// Ratios at 0 or 1 are rejected (the angle is not differentiable there).
struct LimitCheckReport {
  double ratio = 0.0;
  double analytic = 0.0;
  std::vector<double> etas;
  std::vector<double> quotients;
  std::vector<double> deviations;  // |quotient - analytic| / max(|analytic|, 1e-12)
};

LimitCheckReport limit_lemma_check(const ModelParams& params,
                                   const PairBatch& batch,
                                   const FeatureSpec& spec, int k,
                                   std::span<const double> eta_sequence);

// Derivative of the expected gradient of theta_k in the correlation x of
// feature k_prime, checked two ways on common random numbers:
//   FD:  (grad_k at x0+dx - grad_k at x0-dx) / (2 dx), pathwise coupled.
//   RHS: -(theta_kp . mu_kp) / (1 - x0^2) * sum_{i, j != i} p_ij p_ii
//          (theta_kp . u_kp_i)(mu_kp . u_kp_i - x0 mu_kp . v_kp_i) D_ij,
//        D_ij = u_k_i ((v_k_j - v_k_i) . theta_k)
//             + (v_k_j - v_k_i)(u_k_i . theta_k).
// Agreement criterion: per-component 95% intervals overlap.
struct DerivativeCheckConfig {
  int k = 0;
  int k_prime = 1;
  double x0 = 0.5;
  double dx = 0.01;
  int m = 5;
  int64_t n_batches = 100000;
  uint64_t seed = 0x5eedc0de;
  int threads = 1;
};

struct DerivativeCheckReport {
  DerivativeCheckConfig config;
  int64_t n = 0;
  std::vector<double> fd_mean, fd_stderr;
  std::vector<double> rhs_mean, rhs_stderr;
  bool intervals_overlap = false;
};

DerivativeCheckReport gradient_derivative_check(const ModelParams& params,
                                                const FeatureSpec& spec,
                                                const DerivativeCheckConfig& config);

// ---------------------------------------------------------------------------
// Suite runners. Each bundles the checks above with pinned defaults and a
// single pass verdict; the CLI `check` subcommand and the acceptance tests
// both go through these.

struct GradSuiteConfig {
  double step = 1e-5;
  double tolerance = 1e-6;
  uint64_t seed = 20240311;
};

struct GradSuiteInstance {
  int feature_count, ambient_dim, m;
  double max_rel_err;
};

struct GradSuiteReport {
  GradSuiteConfig config;
  std::vector<GradSuiteInstance> instances;
  double max_rel_err = 0.0;
  bool pass = false;
};

GradSuiteReport run_grad_suite(const GradSuiteConfig& config = {});

struct DownstreamSuiteConfig {
  int ambient_dim = 6;
  int n_thetas = 10;
  int64_t n_samples = 1000000;
  double tolerance = 5e-3;
  uint64_t seed = 20240312;
  int threads = 1;
};

struct DownstreamSuiteInstance {
  double angle;
  double closed_form;
  double empirical;
};

struct DownstreamSuiteReport {
  DownstreamSuiteConfig config;
  std::vector<DownstreamSuiteInstance> instances;
  double max_abs_err = 0.0;
  bool pass = false;
};

DownstreamSuiteReport run_downstream_suite(const DownstreamSuiteConfig& config = {});

struct TheoremSuiteConfig {
  int64_t n_batches = 100000;
  uint64_t seed = 20240313;
  int threads = 1;
  double z_threshold = 3.0;
};

struct TheoremSuiteReport {
  TheoremSuiteConfig config;
  TheoremCheckReport canonical;  // weak feature correlated, noise helps
  TheoremCheckReport control;    // alpha_kp = 0, noise changes nothing
  bool pass = false;
};

// The canonical setup used by the suite: K = 2, d = 5, alpha = (0.5, 0.9),
// theta_0 short and nearly orthogonal to mu_0, theta_1 = 0.3 mu_1. Satisfies
// all three inequalities at C = 10.
FeatureSpec theorem_suite_spec();
FeatureSpec theorem_suite_control_spec();
ModelParams theorem_suite_params(const FeatureSpec& spec);

TheoremSuiteReport run_theorem_suite(const TheoremSuiteConfig& config = {});

struct LimitSuiteConfig {
  int n_instances = 10;
  int feature_count = 2;
  int ambient_dim = 4;
  int m = 6;
  double eta = 1e-6;
  int n_halvings = 3;
  double tolerance = 1e-3;
  uint64_t seed = 20240314;
};

struct LimitSuiteReport {
  LimitSuiteConfig config;
  std::vector<LimitCheckReport> instances;
  double max_deviation = 0.0;  // at the smallest eta
  bool pass = false;
};

LimitSuiteReport run_limit_suite(const LimitSuiteConfig& config = {});

struct DerivativeSuiteConfig {
  int64_t n_batches = 100000;
  uint64_t seed = 20240315;
  int threads = 1;
};

struct DerivativeSuiteReport {
  DerivativeSuiteConfig config;
  DerivativeCheckReport check;
  bool pass = false;
};

// K = 2, d = 3, m = 5, x0 = 0.5 with generic (not axis-aligned) parameters.
FeatureSpec derivative_suite_spec();
ModelParams derivative_suite_params(const FeatureSpec& spec);

DerivativeSuiteReport run_derivative_suite(const DerivativeSuiteConfig& config = {});

// JSON codecs and aligned-text rendering for the reports above.
nlohmann::json theorem_report_to_json(const TheoremCheckReport& report);
nlohmann::json derivative_report_to_json(const DerivativeCheckReport& report);
nlohmann::json limit_report_to_json(const LimitCheckReport& report);
nlohmann::json grad_suite_to_json(const GradSuiteReport& report);
nlohmann::json downstream_suite_to_json(const DownstreamSuiteReport& report);
nlohmann::json theorem_suite_to_json(const TheoremSuiteReport& report);
nlohmann::json limit_suite_to_json(const LimitSuiteReport& report);
nlohmann::json derivative_suite_to_json(const DerivativeSuiteReport& report);

std::string grad_suite_to_text(const GradSuiteReport& report);
std::string downstream_suite_to_text(const DownstreamSuiteReport& report);
std::string theorem_suite_to_text(const TheoremSuiteReport& report);
std::string limit_suite_to_text(const LimitSuiteReport& report);
std::string derivative_suite_to_text(const DerivativeSuiteReport& report);

}  // namespace lcsim
