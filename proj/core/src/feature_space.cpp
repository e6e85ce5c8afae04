#include "lcsim/feature_space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lcsim {

namespace {

constexpr double kUnitNormTol = 1e-12;

void check_positive(int value, const char* name) {
  if (value < 1) {
    throw std::invalid_argument(std::string(name) + " must be >= 1, got " +
                                std::to_string(value));
  }
}

}  // namespace

FeatureSpec::FeatureSpec(int feature_count, int ambient_dim, Mat directions,
                         std::vector<double> correlations)
    : k_(feature_count),
      d_(ambient_dim),
      directions_(std::move(directions)),
      correlations_(std::move(correlations)) {
  check_positive(k_, "feature count K");
  check_positive(d_, "ambient dimension d");
  if (directions_.rows != k_ || directions_.cols != d_) {
    throw std::invalid_argument("directions must be K x d");
  }
  if (static_cast<int>(correlations_.size()) != k_) {
    throw std::invalid_argument("correlations must have K entries");
  }
  for (int k = 0; k < k_; ++k) {
    const double n = std::sqrt(norm2(directions_.row(k)));
    if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitNormTol) {
      throw std::invalid_argument("direction " + std::to_string(k) +
                                  " is not unit norm (|mu| = " +
                                  std::to_string(n) + ")");
    }
    const double a = correlations_[k];
    if (!(a >= 0.0 && a <= 1.0)) {
      throw std::invalid_argument("correlation " + std::to_string(k) +
                                  " outside [0, 1]");
    }
  }

  // Complete each mu_k to an orthonormal frame with a Householder
  // reflection H mapping e_1 to -s*mu_k; columns 2..d of H span the
  // complement. s is chosen so the reflector never cancels.
  complement_ = Mat(k_, d_ * (d_ - 1));
  for (int k = 0; k < k_; ++k) {
    auto mu = directions_.row(k);
    const double s = mu[0] >= 0.0 ? 1.0 : -1.0;
    std::vector<double> w(mu.begin(), mu.end());
    w[0] += s;
    const double c = 1.0 / (1.0 + s * mu[0]);
    for (int j = 1; j < d_; ++j) {
      auto col = complement_.row(k).subspan(static_cast<size_t>(j - 1) * d_, d_);
      for (int i = 0; i < d_; ++i) {
        col[i] = (i == j ? 1.0 : 0.0) - c * w[j] * w[i];
      }
    }
  }
}

FeatureSpec FeatureSpec::with_random_directions(int feature_count,
                                                int ambient_dim,
                                                std::vector<double> correlations,
                                                uint64_t directions_seed) {
  check_positive(feature_count, "feature count K");
  check_positive(ambient_dim, "ambient dimension d");
  Mat dirs(feature_count, ambient_dim);
  RngStream root(directions_seed);
  for (int k = 0; k < feature_count; ++k) {
    RngStream s = root.child(StreamPurpose::kMisc, static_cast<uint64_t>(k));
    auto row = dirs.row(k);
    double n = 0.0;
    do {
      s.fill_normal(row);
      n = std::sqrt(norm2(row));
    } while (n < 1e-8);
    for (double& x : row) x /= n;
  }
  return FeatureSpec(feature_count, ambient_dim, std::move(dirs),
                     std::move(correlations));
}

FeatureSpec FeatureSpec::canonical(int feature_count, int ambient_dim,
                                   std::vector<double> correlations) {
  Mat dirs(feature_count, ambient_dim);
  for (int k = 0; k < feature_count; ++k) {
    dirs.at(k, 0) = 1.0;
  }
  return FeatureSpec(feature_count, ambient_dim, std::move(dirs),
                     std::move(correlations));
}

std::span<const double> FeatureSpec::complement_vector(int k, int j) const {
  return complement_.row(k).subspan(static_cast<size_t>(j) * d_, d_);
}

PairBatch::PairBatch(int m_, int k_, int d_)
    : m(m_),
      feature_count(k_),
      ambient_dim(d_),
      anchors(static_cast<size_t>(m_) * k_ * d_, 0.0),
      views(static_cast<size_t>(m_) * k_ * d_, 0.0) {}

std::span<double> PairBatch::anchor_row(int i, int k) {
  return {anchors.data() +
              (static_cast<size_t>(i) * feature_count + k) * ambient_dim,
          static_cast<size_t>(ambient_dim)};
}

std::span<const double> PairBatch::anchor_row(int i, int k) const {
  return {anchors.data() +
              (static_cast<size_t>(i) * feature_count + k) * ambient_dim,
          static_cast<size_t>(ambient_dim)};
}

std::span<double> PairBatch::view_row(int i, int k) {
  return {views.data() +
              (static_cast<size_t>(i) * feature_count + k) * ambient_dim,
          static_cast<size_t>(ambient_dim)};
}

std::span<const double> PairBatch::view_row(int i, int k) const {
  return {views.data() +
              (static_cast<size_t>(i) * feature_count + k) * ambient_dim,
          static_cast<size_t>(ambient_dim)};
}

std::span<const double> PairBatch::anchor_point(int i) const {
  const size_t n = static_cast<size_t>(feature_count) * ambient_dim;
  return {anchors.data() + static_cast<size_t>(i) * n, n};
}

std::span<const double> PairBatch::view_point(int i) const {
  const size_t n = static_cast<size_t>(feature_count) * ambient_dim;
  return {views.data() + static_cast<size_t>(i) * n, n};
}

void PairBatch::validate() const {
  const size_t expect =
      static_cast<size_t>(m) * feature_count * ambient_dim;
  if (m < 1 || anchors.size() != expect || views.size() != expect) {
    throw std::invalid_argument("PairBatch shape is inconsistent");
  }
  for (double x : anchors) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite anchor entry");
  }
  for (double x : views) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite view entry");
  }
}

NoiseSchedule NoiseSchedule::uniform(std::vector<int> targets, double beta,
                                     int64_t start_iteration) {
  NoiseSchedule s;
  s.betas.assign(targets.size(), beta);
  s.targets = std::move(targets);
  s.start_iteration = start_iteration;
  return s;
}

void NoiseSchedule::validate(const FeatureSpec& spec) const {
  if (targets.size() != betas.size()) {
    throw std::invalid_argument("noise schedule: one beta per target required");
  }
  for (size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0 || targets[i] >= spec.feature_count()) {
      throw std::invalid_argument("noise target " + std::to_string(targets[i]) +
                                  " out of range");
    }
    if (i > 0 && targets[i] <= targets[i - 1]) {
      throw std::invalid_argument("noise targets must be strictly increasing");
    }
    if (!(betas[i] >= 0.0 && betas[i] < 1.0)) {
      throw std::invalid_argument("noise beta must lie in [0, 1)");
    }
  }
  if (start_iteration < 0) {
    throw std::invalid_argument("noise start_iteration must be >= 0");
  }
}

namespace {

// tuple layout per (pair, feature): a, b[0..d-2], xi, c[0..d-2].
void materialize_feature(const FeatureSpec& spec, int k, double alpha,
                         const double* tuple, double* u, double* v) {
  const int d = spec.ambient_dim();
  auto mu = spec.direction(k);

  const double a = tuple[0];
  for (int i = 0; i < d; ++i) u[i] = a * mu[i];
  for (int j = 0; j + 1 < d; ++j) {
    const double b = tuple[1 + j];
    auto q = spec.complement_vector(k, j);
    for (int i = 0; i < d; ++i) u[i] += b * q[i];
  }

  const double xi = tuple[d];
  const double proj = alpha * a + std::sqrt(1.0 - alpha * alpha) * xi;
  for (int i = 0; i < d; ++i) v[i] = proj * mu[i];
  for (int j = 0; j + 1 < d; ++j) {
    const double c = tuple[d + 1 + j];
    auto q = spec.complement_vector(k, j);
    for (int i = 0; i < d; ++i) v[i] += c * q[i];
  }
}

}  // namespace

void sample_pair(const FeatureSpec& spec, RngStream& rng,
                 std::span<double> anchor_out, std::span<double> view_out) {
  const int K = spec.feature_count();
  const int d = spec.ambient_dim();
  std::vector<double> tuple(2 * static_cast<size_t>(d));
  for (int k = 0; k < K; ++k) {
    rng.fill_normal(tuple);
    materialize_feature(spec, k, spec.correlation(k), tuple.data(),
                        anchor_out.data() + static_cast<size_t>(k) * d,
                        view_out.data() + static_cast<size_t>(k) * d);
  }
}

PairBatch sample_batch(const FeatureSpec& spec, int m, RngStream& rng) {
  if (m < 1) {
    throw std::invalid_argument("batch size m must be >= 1");
  }
  PairBatch batch(m, spec.feature_count(), spec.ambient_dim());
  const size_t n = static_cast<size_t>(spec.feature_count()) * spec.ambient_dim();
  for (int i = 0; i < m; ++i) {
    sample_pair(spec, rng,
                std::span<double>(batch.anchors.data() + i * n, n),
                std::span<double>(batch.views.data() + i * n, n));
  }
  return batch;
}

PairBatch BatchDraws::materialize(const FeatureSpec& spec) const {
  return materialize_with(spec, 0, spec.correlation(0));
}

PairBatch BatchDraws::materialize_with(const FeatureSpec& spec, int feature,
                                       double correlation) const {
  if (feature < 0 || feature >= feature_count) {
    throw std::invalid_argument("BatchDraws: feature index out of range");
  }
  if (!(correlation >= 0.0 && correlation <= 1.0)) {
    throw std::invalid_argument("BatchDraws: correlation must lie in [0, 1]");
  }
  if (feature_count != spec.feature_count() || ambient_dim != spec.ambient_dim()) {
    throw std::invalid_argument("BatchDraws: shape does not match spec");
  }
  PairBatch batch(m, feature_count, ambient_dim);
  const int d = ambient_dim;
  const size_t per_feature = 2 * static_cast<size_t>(d);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < feature_count; ++k) {
      const double alpha =
          (k == feature) ? correlation : spec.correlation(k);
      const double* tuple =
          draws.data() +
          (static_cast<size_t>(i) * feature_count + k) * per_feature;
      materialize_feature(spec, k, alpha, tuple,
                          batch.anchor_row(i, k).data(),
                          batch.view_row(i, k).data());
    }
  }
  return batch;
}

BatchDraws sample_batch_draws(const FeatureSpec& spec, int m, RngStream& rng) {
  if (m < 1) {
    throw std::invalid_argument("batch size m must be >= 1");
  }
  BatchDraws out;
  out.m = m;
  out.feature_count = spec.feature_count();
  out.ambient_dim = spec.ambient_dim();
  out.draws.resize(static_cast<size_t>(m) * out.feature_count * 2 *
                   out.ambient_dim);
  rng.fill_normal(out.draws);
  return out;
}

PairBatch add_noise(const PairBatch& batch, const NoiseSchedule& schedule,
                    const FeatureSpec& spec, RngStream& rng) {
  schedule.validate(spec);
  PairBatch out = batch;
  const int d = batch.ambient_dim;
  for (int i = 0; i < batch.m; ++i) {
    for (size_t t = 0; t < schedule.targets.size(); ++t) {
      const int k = schedule.targets[t];
      const double beta = schedule.betas[t];
      const double keep = beta;
      const double fresh = std::sqrt(1.0 - beta * beta);
      auto mu = spec.direction(k);
      auto v = out.view_row(i, k);

      // xi ~ N(0, I_d), drawn in the (mu, complement) frame.
      const double s = rng.normal();
      for (int c = 0; c < d; ++c) v[c] = keep * v[c] + fresh * s * mu[c];
      for (int j = 0; j + 1 < d; ++j) {
        const double r = rng.normal();
        auto q = spec.complement_vector(k, j);
        for (int c = 0; c < d; ++c) v[c] += fresh * r * q[c];
      }
    }
  }
  return out;
}

std::vector<double> effective_correlations(const FeatureSpec& spec,
                                           const NoiseSchedule& schedule) {
  schedule.validate(spec);
  std::vector<double> alpha = spec.correlations();
  for (size_t t = 0; t < schedule.targets.size(); ++t) {
    alpha[schedule.targets[t]] *= schedule.betas[t];
  }
  return alpha;
}

namespace {

std::vector<double> correlations_from_json(const nlohmann::json& j, int K) {
  if (j.is_array()) {
    if (static_cast<int>(j.size()) != K) {
      throw std::invalid_argument("correlations array must have K entries");
    }
    return j.get<std::vector<double>>();
  }
  if (j.is_object()) {
    std::vector<double> alpha(K, j.at("default").get<double>());
    if (j.contains("overrides")) {
      for (const auto& [key, value] : j.at("overrides").items()) {
        const int k = std::stoi(key);
        if (k < 0 || k >= K) {
          throw std::invalid_argument("correlations override index " + key +
                                      " out of range");
        }
        alpha[k] = value.get<double>();
      }
    }
    return alpha;
  }
  throw std::invalid_argument("correlations must be an array or an object");
}

}  // namespace

nlohmann::json feature_spec_to_json(const FeatureSpec& spec) {
  nlohmann::json j;
  j["K"] = spec.feature_count();
  j["d"] = spec.ambient_dim();
  j["correlations"] = spec.correlations();
  auto dirs = nlohmann::json::array();
  for (int k = 0; k < spec.feature_count(); ++k) {
    auto row = spec.direction(k);
    dirs.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["directions"] = dirs;
  return j;
}

FeatureSpec feature_spec_from_json(const nlohmann::json& j) {
  const int K = j.at("K").get<int>();
  const int d = j.at("d").get<int>();
  std::vector<double> alpha = correlations_from_json(j.at("correlations"), K);

  const nlohmann::json dirs =
      j.contains("directions") ? j.at("directions") : nlohmann::json("random");
  if (dirs.is_string()) {
    const std::string mode = dirs.get<std::string>();
    if (mode == "canonical") {
      return FeatureSpec::canonical(K, d, std::move(alpha));
    }
    if (mode == "random") {
      if (!j.contains("directions_seed")) {
        throw std::invalid_argument(
            "random directions require a recorded directions_seed");
      }
      return FeatureSpec::with_random_directions(
          K, d, std::move(alpha), j.at("directions_seed").get<uint64_t>());
    }
    throw std::invalid_argument("unknown directions mode '" + mode + "'");
  }
  if (dirs.is_array()) {
    if (static_cast<int>(dirs.size()) != K) {
      throw std::invalid_argument("directions must have K rows");
    }
    Mat m(K, d);
    for (int k = 0; k < K; ++k) {
      const auto row = dirs[k].get<std::vector<double>>();
      if (static_cast<int>(row.size()) != d) {
        throw std::invalid_argument("direction rows must have d entries");
      }
      std::copy(row.begin(), row.end(), m.row(k).begin());
    }
    return FeatureSpec(K, d, std::move(m), std::move(alpha));
  }
  throw std::invalid_argument("directions must be an array or a mode string");
}

nlohmann::json noise_schedule_to_json(const NoiseSchedule& schedule) {
  nlohmann::json j;
  j["targets"] = schedule.targets;
  j["beta"] = schedule.betas;
  if (schedule.start_iteration == NoiseSchedule::kNever) {
    j["start_iteration"] = "never";
  } else {
    j["start_iteration"] = schedule.start_iteration;
  }
  return j;
}

NoiseSchedule noise_schedule_from_json(const nlohmann::json& j,
                                       int feature_count) {
  NoiseSchedule s;
  if (j.is_null()) {
    return s;
  }
  const nlohmann::json& targets = j.at("targets");
  if (targets.is_string() && targets.get<std::string>() == "all") {
    for (int k = 0; k < feature_count; ++k) s.targets.push_back(k);
  } else if (targets.is_object() && targets.contains("except")) {
    const auto except = targets.at("except").get<std::vector<int>>();
    for (int k = 0; k < feature_count; ++k) {
      if (std::find(except.begin(), except.end(), k) == except.end()) {
        s.targets.push_back(k);
      }
    }
  } else if (targets.is_array()) {
    s.targets = targets.get<std::vector<int>>();
    std::sort(s.targets.begin(), s.targets.end());
  } else {
    throw std::invalid_argument(
        "noise targets must be an array, \"all\", or {\"except\": [...]}");
  }

  const nlohmann::json& beta = j.at("beta");
  if (beta.is_number()) {
    s.betas.assign(s.targets.size(), beta.get<double>());
  } else {
    s.betas = beta.get<std::vector<double>>();
  }

  if (j.contains("start_iteration")) {
    const nlohmann::json& start = j.at("start_iteration");
    if (start.is_string() && start.get<std::string>() == "never") {
      s.start_iteration = NoiseSchedule::kNever;
    } else {
      s.start_iteration = start.get<int64_t>();
    }
  }
  return s;
}

}  // namespace lcsim
