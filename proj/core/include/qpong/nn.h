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

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace qpong::nn {

using Rng = std::mt19937_64;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Uniform double in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

// Parameter layout of a dense layer inside a flat vector: the out x in weight
// matrix in row-major order, followed by the bias when present.
struct DenseLayer {
  Eigen::Index in_dim = 0;
  Eigen::Index out_dim = 0;
  bool has_bias = true;

  std::size_t num_params() const;
};

// y = W x (+ b).
Eigen::VectorXd linear_forward(const DenseLayer& layer, std::span<const double> params,
                               const Eigen::VectorXd& x);

// Adds dL/dW and dL/db into `param_grad` and returns dL/dx.
Eigen::VectorXd linear_backward(const DenseLayer& layer, std::span<const double> params,
                                const Eigen::VectorXd& x, const Eigen::VectorXd& upstream,
                                std::span<double> param_grad);

// Orthogonal weights scaled by `gain` (QR of a Gaussian matrix, sign
// corrected), bias set to `bias_value`.
void orthogonal_init(const DenseLayer& layer, double gain, double bias_value, Rng& rng,
                     std::span<double> params);

// Categorical distribution over a finite set of actions.
std::vector<double> softmax(std::span<const double> logits);
double logsumexp(std::span<const double> logits);
double categorical_logprob(std::span<const double> logits, int action);
double categorical_entropy(std::span<const double> logits);
int categorical_sample(std::span<const double> logits, Rng& rng);

struct AdamOptions {
  double learning_rate = 2.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-5;
};

class Adam {
 public:
  Adam(std::size_t num_params, AdamOptions options);

  // Bias-corrected update of `params` in place.
  void step(std::span<double> params, std::span<const double> grads);

  std::int64_t step_count() const { return step_count_; }
  const AdamOptions& options() const { return options_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

 private:
  AdamOptions options_;
  std::int64_t step_count_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

// Rescales `grads` so that its L2 norm is at most `max_norm`. Returns the
// norm before clipping.
double clip_global_norm(std::span<double> grads, double max_norm);

double l2_norm(std::span<const double> v);

}  // namespace qpong::nn
