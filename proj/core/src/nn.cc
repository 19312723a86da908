// Copyright 2026 The qpong Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qpong/nn.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/QR>

#include "qpong/error.h"

namespace qpong::nn {
namespace {

void check_params(const DenseLayer& layer, std::span<const double> params) {
  if (params.size() != layer.num_params()) {
    throw ConfigError("dense layer expects " + std::to_string(layer.num_params()) +
                      " parameters, got " + std::to_string(params.size()));
  }
}

void check_finite(std::span<const double> logits) {
  if (logits.empty()) throw ConfigError("categorical distribution needs at least one logit");
  for (double z : logits) {
    if (!std::isfinite(z)) throw NumericError("non-finite logit");
  }
}

}  // namespace

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t DenseLayer::num_params() const {
  const auto weights = static_cast<std::size_t>(in_dim * out_dim);
  return has_bias ? weights + static_cast<std::size_t>(out_dim) : weights;
}

Eigen::VectorXd linear_forward(const DenseLayer& layer, std::span<const double> params,
                               const Eigen::VectorXd& x) {
  check_params(layer, params);
  if (x.size() != layer.in_dim) throw ConfigError("dense layer input has wrong size");
  Eigen::Map<const RowMajorMatrix> w(params.data(), layer.out_dim, layer.in_dim);
  Eigen::VectorXd y = w * x;
  if (layer.has_bias) {
    y += Eigen::Map<const Eigen::VectorXd>(params.data() + layer.in_dim * layer.out_dim,
                                           layer.out_dim);
  }
  return y;
}

Eigen::VectorXd linear_backward(const DenseLayer& layer, std::span<const double> params,
                                const Eigen::VectorXd& x, const Eigen::VectorXd& upstream,
                                std::span<double> param_grad) {
  check_params(layer, params);
  if (param_grad.size() != params.size()) throw ConfigError("gradient buffer has wrong size");
  if (x.size() != layer.in_dim || upstream.size() != layer.out_dim) {
    throw ConfigError("dense layer backward shapes do not conform");
  }
  Eigen::Map<const RowMajorMatrix> w(params.data(), layer.out_dim, layer.in_dim);
  Eigen::Map<RowMajorMatrix> gw(param_grad.data(), layer.out_dim, layer.in_dim);
  gw.noalias() += upstream * x.transpose();
  if (layer.has_bias) {
    Eigen::Map<Eigen::VectorXd>(param_grad.data() + layer.in_dim * layer.out_dim,
                                layer.out_dim) += upstream;
  }
  return w.transpose() * upstream;
}

void orthogonal_init(const DenseLayer& layer, double gain, double bias_value, Rng& rng,
                     std::span<double> params) {
  check_params(layer, params);
  const Eigen::Index rows = layer.out_dim;
  const Eigen::Index cols = layer.in_dim;
  const bool transpose = rows < cols;
  const Eigen::Index tall = transpose ? cols : rows;
  const Eigen::Index wide = transpose ? rows : cols;

  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd gaussian(tall, wide);
  for (Eigen::Index c = 0; c < wide; ++c) {
    for (Eigen::Index r = 0; r < tall; ++r) gaussian(r, c) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, wide);
  const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(wide, wide);
  for (Eigen::Index c = 0; c < wide; ++c) {
    if (r(c, c) < 0) q.col(c) *= -1.0;
  }
  const Eigen::MatrixXd w = transpose ? Eigen::MatrixXd(q.transpose()) : q;

  Eigen::Map<RowMajorMatrix> out(params.data(), rows, cols);
  out = gain * w;
  if (layer.has_bias) {
    std::fill(params.begin() + rows * cols, params.end(), bias_value);
  }
}

double logsumexp(std::span<const double> logits) {
  check_finite(logits);
  const double top = *std::max_element(logits.begin(), logits.end());
  double acc = 0.0;
  for (double z : logits) acc += std::exp(z - top);
  return top + std::log(acc);
}

std::vector<double> softmax(std::span<const double> logits) {
  const double lse = logsumexp(logits);
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) p[i] = std::exp(logits[i] - lse);
  return p;
}

double categorical_logprob(std::span<const double> logits, int action) {
  if (action < 0 || static_cast<std::size_t>(action) >= logits.size()) {
    throw ConfigError("action " + std::to_string(action) + " out of range");
  }
  return logits[static_cast<std::size_t>(action)] - logsumexp(logits);
}

double categorical_entropy(std::span<const double> logits) {
  const double lse = logsumexp(logits);
  double h = 0.0;
  for (double z : logits) {
    const double logp = z - lse;
    h -= std::exp(logp) * logp;
  }
  return std::max(h, 0.0);
}

int categorical_sample(std::span<const double> logits, Rng& rng) {
  const auto p = softmax(logits);
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cumulative += p[i];
    if (u < cumulative) return static_cast<int>(i);
  }
  // Rounding left the cumulative sum just below 1.
  for (std::size_t i = p.size(); i-- > 0;) {
    if (p[i] > 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

Adam::Adam(std::size_t num_params, AdamOptions options)
    : options_(options), m_(num_params, 0.0), v_(num_params, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ConfigError("Adam parameter/gradient length mismatch");
  }
  ++step_count_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  const double step_size = options_.learning_rate / correction1;
  const double sqrt_c2 = std::sqrt(correction2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
    v_[i] = b2 * v_[i] + (1.0 - b2) * grads[i] * grads[i];
    const double denom = std::sqrt(v_[i]) / sqrt_c2 + options_.epsilon;
    params[i] -= step_size * m_[i] / denom;
  }
}

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double clip_global_norm(std::span<double> grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("max_norm must be positive");
  const double norm = l2_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

}  // namespace qpong::nn
