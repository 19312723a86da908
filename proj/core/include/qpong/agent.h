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

#include <array>
#include <span>
#include <vector>

#include "qpong/backbone.h"
#include "qpong/nn.h"
#include "qpong/pong.h"

namespace qpong::ppo {

using Logits = std::array<double, env::kNumActions>;

// Backbone followed by two linear heads reading the shared features. The
// flat parameter vector is [backbone | actor W, b | critic W, b].
class ActorCritic {
 public:
  explicit ActorCritic(backbone::BackboneConfig config);

  const backbone::Backbone& backbone() const { return backbone_; }
  std::size_t num_params() const { return num_params_; }
  std::size_t actor_offset() const { return backbone_.num_params(); }
  std::size_t critic_offset() const { return actor_offset() + actor_.num_params(); }

  struct Output {
    std::vector<double> features;
    Logits logits{};
    double value = 0.0;
  };

  Output forward(std::span<const double> params, std::span<const double> obs) const;

  // Accumulates dL/dparams into `grad` given dL/dlogits and dL/dvalue.
  // `forward_out` must come from forward(params, obs).
  void backward(std::span<const double> params, std::span<const double> obs,
                const Output& forward_out, std::span<const double> dlogits, double dvalue,
                std::span<double> grad) const;

  // Backbone init, actor head orthogonal with gain 0.01, critic head
  // orthogonal with gain 1, zero head biases.
  std::vector<double> init_params(nn::Rng& rng) const;

 private:
  void check(std::span<const double> params) const;

  backbone::Backbone backbone_;
  nn::DenseLayer actor_;
  nn::DenseLayer critic_;
  std::size_t num_params_;
};

}  // namespace qpong::ppo
