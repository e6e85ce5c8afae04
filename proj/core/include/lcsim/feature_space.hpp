#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lcsim/mat.hpp"
#include "lcsim/rng.hpp"

namespace lcsim {

// Ground-truth feature geometry: K unit directions mu_k in R^d and a
// per-feature view correlation alpha_k in [0, 1].
//
// Each feature also carries a cached orthonormal basis of the complement
// of mu_k. Sampling draws coordinates in the (mu_k, complement) frame, which
// makes a whole trajectory exactly equivariant under per-feature rotations
// of the frame (same stream, rotated geometry -> rotated draws).
class FeatureSpec {
 public:
  // directions: K x d row-major, each row unit-norm within 1e-12.
  FeatureSpec(int feature_count, int ambient_dim, Mat directions,
              std::vector<double> correlations);

  // mu_k drawn uniformly from the unit sphere, seeded and reproducible.
  static FeatureSpec with_random_directions(int feature_count, int ambient_dim,
                                            std::vector<double> correlations,
                                            uint64_t directions_seed);

  // Every mu_k = e_1.
  static FeatureSpec canonical(int feature_count, int ambient_dim,
                               std::vector<double> correlations);

  int feature_count() const { return k_; }
  int ambient_dim() const { return d_; }

  std::span<const double> direction(int k) const { return directions_.row(k); }
  const Mat& directions() const { return directions_; }
  double correlation(int k) const { return correlations_[k]; }
  const std::vector<double>& correlations() const { return correlations_; }

  // j-th orthonormal basis vector of the complement of mu_k, j in
  // [0, ambient_dim - 1). Empty complement when d == 1.
  std::span<const double> complement_vector(int k, int j) const;

 private:
  int k_ = 0;
  int d_ = 0;
  Mat directions_;                    // K x d
  std::vector<double> correlations_;  // K
  Mat complement_;                    // K x (d * (d - 1)); vector j at [j*d, j*d+d)
};

// A batch of m anchor/view pairs; each point is a K x d array stored
// contiguously, so point i is the K*d block starting at i*K*d.
struct PairBatch {
  int m = 0;
  int feature_count = 0;
  int ambient_dim = 0;
  std::vector<double> anchors;  // m * K * d
  std::vector<double> views;    // m * K * d

  PairBatch() = default;
  PairBatch(int m_, int k_, int d_);

  std::span<double> anchor_row(int i, int k);
  std::span<const double> anchor_row(int i, int k) const;
  std::span<double> view_row(int i, int k);
  std::span<const double> view_row(int i, int k) const;

  // Point i as a K x d block.
  std::span<const double> anchor_point(int i) const;
  std::span<const double> view_point(int i) const;

  // Throws std::invalid_argument on shape mismatch or non-finite entries.
  void validate() const;
};

// Noise injection plan: replace view rows k' by beta * v + sqrt(1-beta^2) * xi
// with xi ~ N(0, I_d), starting at a given training iteration.
struct NoiseSchedule {
  static constexpr int64_t kNever = std::numeric_limits<int64_t>::max();

  std::vector<int> targets;    // feature indices, strictly increasing
  std::vector<double> betas;   // per target, each in [0, 1)
  int64_t start_iteration = 0;

  bool empty() const { return targets.empty(); }
  bool active_at(int64_t iteration) const {
    return !targets.empty() && iteration >= start_iteration;
  }

  static NoiseSchedule none() { return {}; }
  static NoiseSchedule uniform(std::vector<int> targets, double beta,
                               int64_t start_iteration);

  // Validates betas and target indices against a spec.
  void validate(const FeatureSpec& spec) const;
};

// One correlated pair (u, v). Per feature k: u_k ~ N(0, I_d) and
// v_k' mu_k = alpha_k u_k' mu_k + sqrt(1 - alpha_k^2) xi, with the complement
// components independent standard Gaussians. Consumes 2*d normals per
// feature in a fixed documented order (a, b[0..d-2], xi, c[0..d-2]).
void sample_pair(const FeatureSpec& spec, RngStream& rng,
                 std::span<double> anchor_out, std::span<double> view_out);

// m i.i.d. pairs from one stream. m >= 1.
PairBatch sample_batch(const FeatureSpec& spec, int m, RngStream& rng);

// The raw frame coordinates behind a batch: per (pair, feature) the tuple
// (a, b[0..d-2], xi, c[0..d-2]) in draw order. materialize() rebuilds the
// exact batch sample_batch would have produced from the same stream;
// materialize_with() substitutes the correlation of one feature. Reusing one
// set of draws across nearby substituted values yields pathwise-coupled
// batches for derivative-in-correlation estimates.
struct BatchDraws {
  int m = 0;
  int feature_count = 0;
  int ambient_dim = 0;
  std::vector<double> draws;  // m * K * 2d

  PairBatch materialize(const FeatureSpec& spec) const;
  PairBatch materialize_with(const FeatureSpec& spec, int feature,
                             double correlation) const;
};

BatchDraws sample_batch_draws(const FeatureSpec& spec, int m, RngStream& rng);

// Applies the schedule's beta-mixing to every target view row of every pair;
// anchors and non-target rows pass through untouched. The schedule's
// start_iteration is not consulted here; callers gate on active_at().
PairBatch add_noise(const PairBatch& batch, const NoiseSchedule& schedule,
                    const FeatureSpec& spec, RngStream& rng);

// Correlations after noise: alpha~_k = beta_k * alpha_k on targets.
std::vector<double> effective_correlations(const FeatureSpec& spec,
                                           const NoiseSchedule& schedule);

// JSON document form:
//   {"K": .., "d": .., "correlations": [...], "directions": [[...], ...]}
// Accepted input shorthands: correlations as {"default": x, "overrides":
// {"0": 0.125}}; directions as "canonical" or "random" (the latter requires
// "directions_seed"); omitted directions mean "random".
nlohmann::json feature_spec_to_json(const FeatureSpec& spec);
FeatureSpec feature_spec_from_json(const nlohmann::json& j);

nlohmann::json noise_schedule_to_json(const NoiseSchedule& schedule);
NoiseSchedule noise_schedule_from_json(const nlohmann::json& j, int feature_count);

}  // namespace lcsim
