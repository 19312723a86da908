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

#include "qpong/agent.h"

#include <string>

#include "qpong/error.h"

namespace qpong::ppo {

ActorCritic::ActorCritic(backbone::BackboneConfig config)
    : backbone_(config),
      actor_{backbone::kFeatureDim, env::kNumActions, true},
      critic_{backbone::kFeatureDim, 1, true},
      num_params_(backbone_.num_params() + actor_.num_params() + critic_.num_params()) {}

void ActorCritic::check(std::span<const double> params) const {
  if (params.size() != num_params_) {
    throw ConfigError("agent expects " + std::to_string(num_params_) + " parameters, got " +
                      std::to_string(params.size()));
  }
}

ActorCritic::Output ActorCritic::forward(std::span<const double> params,
                                         std::span<const double> obs) const {
  check(params);
  Output out;
  out.features = backbone_.forward(params.first(backbone_.num_params()), obs);
  const Eigen::Map<const Eigen::VectorXd> f(out.features.data(), backbone::kFeatureDim);
  const Eigen::VectorXd logits =
      nn::linear_forward(actor_, params.subspan(actor_offset(), actor_.num_params()), f);
  for (int a = 0; a < env::kNumActions; ++a) out.logits[static_cast<std::size_t>(a)] = logits[a];
  out.value =
      nn::linear_forward(critic_, params.subspan(critic_offset(), critic_.num_params()), f)[0];
  return out;
}

void ActorCritic::backward(std::span<const double> params, std::span<const double> obs,
                           const Output& forward_out, std::span<const double> dlogits,
                           double dvalue, std::span<double> grad) const {
  check(params);
  if (grad.size() != num_params_) throw ConfigError("gradient buffer has wrong size");
  if (dlogits.size() != env::kNumActions) throw ConfigError("dlogits has wrong size");

  const auto bb_params = params.first(backbone_.num_params());
  if (forward_out.features.size() != backbone::kFeatureDim) {
    throw ConfigError("forward output has no features");
  }
  const Eigen::Map<const Eigen::VectorXd> f(forward_out.features.data(), backbone::kFeatureDim);
  const Eigen::Map<const Eigen::VectorXd> g_logits(dlogits.data(), env::kNumActions);
  Eigen::VectorXd g_value(1);
  g_value[0] = dvalue;

  Eigen::VectorXd upstream = nn::linear_backward(
      actor_, params.subspan(actor_offset(), actor_.num_params()), f, g_logits,
      grad.subspan(actor_offset(), actor_.num_params()));
  upstream += nn::linear_backward(critic_, params.subspan(critic_offset(), critic_.num_params()),
                                  f, g_value, grad.subspan(critic_offset(), critic_.num_params()));

  const auto bb = backbone_.backward(bb_params, obs, {upstream.data(), backbone::kFeatureDim});
  for (std::size_t i = 0; i < bb.params.size(); ++i) grad[i] += bb.params[i];
}

std::vector<double> ActorCritic::init_params(nn::Rng& rng) const {
  std::vector<double> params = backbone_.init_params(rng);
  params.resize(num_params_, 0.0);
  std::span<double> all(params);
  nn::orthogonal_init(actor_, 0.01, 0.0, rng, all.subspan(actor_offset(), actor_.num_params()));
  nn::orthogonal_init(critic_, 1.0, 0.0, rng, all.subspan(critic_offset(), critic_.num_params()));
  return params;
}

}  // namespace qpong::ppo
