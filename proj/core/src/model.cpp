#include "lcsim/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lcsim {

namespace {

constexpr char kParamsMagic[4] = {'L', 'C', 'S', 'M'};
constexpr uint32_t kParamsVersion = 1;

void check_shapes(const ModelParams& params, const PairBatch& batch) {
  if (params.feature_count() != batch.feature_count ||
      params.ambient_dim() != batch.ambient_dim) {
    throw std::invalid_argument(
        "model/batch shape mismatch: Theta is " +
        std::to_string(params.feature_count()) + "x" +
        std::to_string(params.ambient_dim()) + ", batch is " +
        std::to_string(batch.feature_count) + "x" +
        std::to_string(batch.ambient_dim));
  }
}

// Anchor and view scores: A[i][k] = theta_k' u_k_i, B[j][k] = theta_k' v_k_j.
void feature_scores(const ModelParams& params, const PairBatch& batch,
                    Mat& anchor_scores, Mat& view_scores) {
  const int m = batch.m;
  const int K = batch.feature_count;
  anchor_scores = Mat(m, K);
  view_scores = Mat(m, K);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < K; ++k) {
      anchor_scores.at(i, k) = dot(params.row(k), batch.anchor_row(i, k));
      view_scores.at(i, k) = dot(params.row(k), batch.view_row(i, k));
    }
  }
}

void softmax_rows(const Mat& z, Mat& p) {
  const int m = z.rows;
  p = Mat(m, m);
  for (int i = 0; i < m; ++i) {
    auto zi = z.row(i);
    const double zmax = *std::max_element(zi.begin(), zi.end());
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
      const double e = std::exp(zi[j] - zmax);
      p.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < m; ++j) p.at(i, j) /= sum;
  }
}

double row_logsumexp(std::span<const double> zi) {
  const double zmax = *std::max_element(zi.begin(), zi.end());
  double sum = 0.0;
  for (double zj : zi) sum += std::exp(zj - zmax);
  return zmax + std::log(sum);
}

void compute_z(const ModelParams& params, const PairBatch& batch,
               const EvalOptions& opts, Mat& anchor_scores, Mat& view_scores,
               Mat& z) {
  check_shapes(params, batch);
  if (opts.temperature <= 0.0) {
    throw std::invalid_argument("temperature must be > 0");
  }
  feature_scores(params, batch, anchor_scores, view_scores);
  const int m = batch.m;
  const int K = batch.feature_count;
  const double inv_temp = 1.0 / opts.temperature;
  z = Mat(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int k = 0; k < K; ++k) {
        s += anchor_scores.at(i, k) * view_scores.at(j, k);
      }
      z.at(i, j) = s * inv_temp;
      if (!std::isfinite(z.at(i, j))) {
        throw std::domain_error("similarity score z(" + std::to_string(i) +
                                ", " + std::to_string(j) + ") is not finite");
      }
    }
  }
}

double loss_from_z(const Mat& z, LossAggregation aggregation) {
  const int m = z.rows;
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    const double li = row_logsumexp(z.row(i)) - z.at(i, i);
    if (!std::isfinite(li)) {
      std::cerr << "lcsim: warning: correct-pair probability underflowed to 0 "
                   "for anchor "
                << i << "; loss is +inf\n";
    }
    total += li;
  }
  if (aggregation == LossAggregation::kMean) total /= m;
  return total;
}

// grad row k = sum_ij (p_ij - delta_ij) (u_k_i (theta_k' v_k_j) +
// v_k_j (theta_k' u_k_i)), accumulated through the per-point score sums.
Mat grad_from_parts(const PairBatch& batch, const Mat& p,
                    const Mat& anchor_scores, const Mat& view_scores,
                    const EvalOptions& opts) {
  const int m = batch.m;
  const int K = batch.feature_count;
  const int d = batch.ambient_dim;
  Mat grad(K, d);
  // anchor_weight[i][k] = sum_j (p_ij - delta_ij) * B[j][k]
  // view_weight[j][k]   = sum_i (p_ij - delta_ij) * A[i][k]
  Mat anchor_weight(m, K);
  Mat view_weight(m, K);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double g = p.at(i, j) - (i == j ? 1.0 : 0.0);
      for (int k = 0; k < K; ++k) {
        anchor_weight.at(i, k) += g * view_scores.at(j, k);
        view_weight.at(j, k) += g * anchor_scores.at(i, k);
      }
    }
  }
  double scale = 1.0 / opts.temperature;
  if (opts.aggregation == LossAggregation::kMean) scale /= m;
  for (int k = 0; k < K; ++k) {
    auto gk = grad.row(k);
    for (int i = 0; i < m; ++i) {
      const double wa = anchor_weight.at(i, k) * scale;
      const double wv = view_weight.at(i, k) * scale;
      auto u = batch.anchor_row(i, k);
      auto v = batch.view_row(i, k);
      for (int c = 0; c < d; ++c) gk[c] += wa * u[c] + wv * v[c];
    }
  }
  return grad;
}

}  // namespace

bool ModelParams::all_finite() const {
  for (double x : theta.v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::vector<double> parallel_part(const ModelParams& params,
                                  const FeatureSpec& spec, int k) {
  auto mu = spec.direction(k);
  const double c = dot(params.row(k), mu);
  std::vector<double> out(mu.size());
  for (size_t i = 0; i < mu.size(); ++i) out[i] = c * mu[i];
  return out;
}

std::vector<double> orthogonal_part(const ModelParams& params,
                                    const FeatureSpec& spec, int k) {
  std::vector<double> out = parallel_part(params, spec, k);
  auto theta = params.row(k);
  for (size_t i = 0; i < out.size(); ++i) out[i] = theta[i] - out[i];
  return out;
}

std::vector<double> representation(const ModelParams& params,
                                   std::span<const double> w) {
  const int K = params.feature_count();
  const int d = params.ambient_dim();
  if (static_cast<int>(w.size()) != K * d) {
    throw std::invalid_argument("representation: point must be K x d");
  }
  std::vector<double> out(K);
  for (int k = 0; k < K; ++k) {
    out[k] = dot(params.row(k), w.subspan(static_cast<size_t>(k) * d, d));
  }
  return out;
}

void similarity_and_logits(const ModelParams& params, const PairBatch& batch,
                           Mat& z_out, Mat& p_out, const EvalOptions& opts) {
  Mat a, b;
  compute_z(params, batch, opts, a, b, z_out);
  softmax_rows(z_out, p_out);
}

double loss(const ModelParams& params, const PairBatch& batch,
            const EvalOptions& opts) {
  Mat a, b, z;
  compute_z(params, batch, opts, a, b, z);
  return loss_from_z(z, opts.aggregation);
}

Mat grad_closed_form(const ModelParams& params, const PairBatch& batch,
                     const EvalOptions& opts) {
  Mat a, b, z, p;
  compute_z(params, batch, opts, a, b, z);
  softmax_rows(z, p);
  return grad_from_parts(batch, p, a, b, opts);
}

LossReport evaluate(const ModelParams& params, const PairBatch& batch,
                    const EvalOptions& opts) {
  LossReport report;
  Mat a, b;
  compute_z(params, batch, opts, a, b, report.z);
  softmax_rows(report.z, report.p);
  report.loss = loss_from_z(report.z, opts.aggregation);
  report.grad = grad_from_parts(batch, report.p, a, b, opts);
  double acc = 0.0;
  for (int i = 0; i < batch.m; ++i) acc += report.p.at(i, i);
  report.mean_correct_probability = acc / batch.m;
  return report;
}

ModelParams gd_update(const ModelParams& params, const PairBatch& batch,
                      double eta, double lambda, const EvalOptions& opts) {
  if (!(eta > 0.0)) {
    throw std::invalid_argument("step size eta must be > 0");
  }
  return apply_update(params, grad_closed_form(params, batch, opts), eta,
                      lambda);
}

ModelParams apply_update(const ModelParams& params, const Mat& grad,
                         double eta, double lambda) {
  if (!params.theta.same_shape(grad)) {
    throw std::invalid_argument("gradient/parameter shape mismatch");
  }
  ModelParams next = params;
  for (size_t i = 0; i < next.theta.v.size(); ++i) {
    next.theta.v[i] -= eta * (grad.v[i] + lambda * params.theta.v[i]);
  }
  return next;
}

void save_params_binary(const ModelParams& params, const std::string& path) {
  static_assert(std::endian::native == std::endian::little,
                "params binary format assumes a little-endian host");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  const uint32_t header[3] = {kParamsVersion,
                              static_cast<uint32_t>(params.feature_count()),
                              static_cast<uint32_t>(params.ambient_dim())};
  out.write(kParamsMagic, sizeof(kParamsMagic));
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(params.theta.v.data()),
            static_cast<std::streamsize>(params.theta.v.size() * sizeof(double)));
  if (!out) {
    throw std::runtime_error("short write to '" + path + "'");
  }
}

ModelParams load_params_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "'");
  }
  char magic[4];
  uint32_t header[3];
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::memcmp(magic, kParamsMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("'" + path + "' is not a params file");
  }
  if (header[0] != kParamsVersion) {
    throw std::runtime_error("unsupported params version " +
                             std::to_string(header[0]));
  }
  ModelParams params(static_cast<int>(header[1]), static_cast<int>(header[2]));
  in.read(reinterpret_cast<char*>(params.theta.v.data()),
          static_cast<std::streamsize>(params.theta.v.size() * sizeof(double)));
  if (!in) {
    throw std::runtime_error("truncated params file '" + path + "'");
  }
  return params;
}

nlohmann::json params_to_json(const ModelParams& params) {
  nlohmann::json j;
  j["K"] = params.feature_count();
  j["d"] = params.ambient_dim();
  auto rows = nlohmann::json::array();
  for (int k = 0; k < params.feature_count(); ++k) {
    auto r = params.row(k);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["theta"] = rows;
  return j;
}

ModelParams params_from_json(const nlohmann::json& j) {
  const int K = j.at("K").get<int>();
  const int d = j.at("d").get<int>();
  ModelParams params(K, d);
  const auto& rows = j.at("theta");
  if (static_cast<int>(rows.size()) != K) {
    throw std::invalid_argument("theta must have K rows");
  }
  for (int k = 0; k < K; ++k) {
    const auto row = rows[k].get<std::vector<double>>();
    if (static_cast<int>(row.size()) != d) {
      throw std::invalid_argument("theta rows must have d entries");
    }
    std::copy(row.begin(), row.end(), params.row(k).begin());
  }
  return params;
}

}  // namespace lcsim
