#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lcsim/feature_space.hpp"
#include "lcsim/mat.hpp"

namespace lcsim {

// Linear feature extractors Theta in R^{K x d}, one row theta_k per feature.
struct ModelParams {
  Mat theta;

  ModelParams() = default;
  explicit ModelParams(Mat t) : theta(std::move(t)) {}
  ModelParams(int feature_count, int ambient_dim)
      : theta(feature_count, ambient_dim) {}

  int feature_count() const { return theta.rows; }
  int ambient_dim() const { return theta.cols; }
  std::span<double> row(int k) { return theta.row(k); }
  std::span<const double> row(int k) const { return theta.row(k); }

  bool all_finite() const;
};

// Projection of theta_k onto mu_k, and the remainder orthogonal to it.
std::vector<double> parallel_part(const ModelParams& params,
                                  const FeatureSpec& spec, int k);
std::vector<double> orthogonal_part(const ModelParams& params,
                                    const FeatureSpec& spec, int k);

enum class LossAggregation { kSum, kMean };

struct EvalOptions {
  // Softmax temperature; 1 everywhere in the theory checks.
  double temperature = 1.0;
  // Batch loss is the sum over anchors by default; mean rescales loss and
  // gradient by 1/m.
  LossAggregation aggregation = LossAggregation::kSum;
};

// Similarity scores, softmax rows, batch loss, and gradient for one batch.
struct LossReport {
  Mat z;        // m x m, z_ij = <f(u_i), f(v_j)>
  Mat p;        // m x m, row-stochastic softmax of z / temperature
  double loss = 0.0;
  Mat grad;     // K x d
  double mean_correct_probability = 0.0;  // (1/m) sum_i p_ii
};

// Representation f_Theta(w) in R^K, component k = w_k' theta_k.
// w is a K x d point stored row-major.
std::vector<double> representation(const ModelParams& params,
                                   std::span<const double> w);

// z and row-softmax p for a batch. Throws std::domain_error naming the
// offending (i, j) if any score is non-finite.
void similarity_and_logits(const ModelParams& params, const PairBatch& batch,
                           Mat& z_out, Mat& p_out,
                           const EvalOptions& opts = {});

// Batch cross-entropy loss: sum_i -log p_ii, computed in log space.
double loss(const ModelParams& params, const PairBatch& batch,
            const EvalOptions& opts = {});

// Closed-form gradient dL/dTheta, assembled per row from
//   dz_ij/dtheta_k = (u_k_i v_k_j' + v_k_j u_k_i') theta_k.
Mat grad_closed_form(const ModelParams& params, const PairBatch& batch,
                     const EvalOptions& opts = {});

// z, p, loss, and gradient in one pass over the batch.
LossReport evaluate(const ModelParams& params, const PairBatch& batch,
                    const EvalOptions& opts = {});

// Theta <- Theta - eta * (grad + lambda * Theta).
ModelParams gd_update(const ModelParams& params, const PairBatch& batch,
                      double eta, double lambda, const EvalOptions& opts = {});
ModelParams apply_update(const ModelParams& params, const Mat& grad,
                         double eta, double lambda);

// Binary round trip is bit-exact: fixed little-endian header + raw doubles.
void save_params_binary(const ModelParams& params, const std::string& path);
ModelParams load_params_binary(const std::string& path);

nlohmann::json params_to_json(const ModelParams& params);
ModelParams params_from_json(const nlohmann::json& j);

}  // namespace lcsim
