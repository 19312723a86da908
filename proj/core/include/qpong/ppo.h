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

// Proximal policy optimisation over vectorized Pong environments.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qpong/agent.h"
#include "qpong/backbone.h"
#include "qpong/nn.h"
#include "qpong/pong.h"

namespace qpong::ppo {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_coef = 0.2;
  double vf_coef = 0.5;
  double ent_coef = 0.01;
  double learning_rate = 2.5e-4;
  double adam_epsilon = 1e-5;
  int num_envs = 8;
  int num_steps = 128;
  int update_epochs = 4;
  int num_minibatches = 4;
  std::int64_t total_timesteps = 100000;
  double max_grad_norm = 0.5;
  bool norm_adv = true;
  bool clip_vloss = false;

  void validate() const;
  int batch_size() const { return num_envs * num_steps; }
  int minibatch_size() const { return batch_size() / num_minibatches; }
  std::int64_t num_updates() const { return total_timesteps / batch_size(); }

  friend bool operator==(const PpoConfig&, const PpoConfig&) = default;
};

// Independent generator for (seed, stream, index).
nn::Rng derive_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

// Step-major storage: entry (step, env) lives at step * num_envs + env.
// dones[i] marks that obs[i] is the first observation of a new episode.
struct RolloutBuffer {
  RolloutBuffer(int num_steps, int num_envs);

  std::size_t index(int step, int env) const {
    return static_cast<std::size_t>(step) * static_cast<std::size_t>(num_envs) +
           static_cast<std::size_t>(env);
  }
  std::size_t size() const { return obs.size(); }

  int num_steps;
  int num_envs;
  std::vector<env::Observation> obs;
  std::vector<int> actions;
  std::vector<double> logprobs;
  std::vector<double> rewards;
  std::vector<double> dones;
  std::vector<double> values;
};

struct AdvantageEstimate {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values
};

// Truncated GAE for one environment's sequence. `dones[t]` flags that step t
// starts a new episode; `bootstrap_done` plays that role for the step after
// the last one.
AdvantageEstimate compute_gae(std::span<const double> rewards, std::span<const double> values,
                              std::span<const double> dones, double bootstrap_value,
                              double bootstrap_done, double gamma, double lambda);

// Applies compute_gae to every environment column of `buffer`.
AdvantageEstimate compute_gae(const RolloutBuffer& buffer,
                              std::span<const double> bootstrap_values,
                              std::span<const double> bootstrap_dones, double gamma,
                              double lambda);

// Zero mean, unit (unbiased) standard deviation. Batches of size <= 1 or with
// zero spread are only centered.
void normalize_advantages(std::span<double> advantages);

struct Batch {
  std::vector<env::Observation> obs;
  std::vector<int> actions;
  std::vector<double> old_logprobs;
  std::vector<double> old_values;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return obs.size(); }
};

struct LossOutputs {
  double total = 0.0;        // minimized: -(clip - c1 * vf + c2 * entropy)
  double clip_objective = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

struct LossGradients {
  std::vector<Logits> dlogits;
  std::vector<double> dvalues;
};

// Clipped-surrogate loss over `batch` given the current policy's logits and
// values. Fills `grads` with dtotal/dlogits and dtotal/dvalue when non-null.
LossOutputs ppo_loss(const Batch& batch, std::span<const Logits> logits,
                     std::span<const double> values, const PpoConfig& config,
                     LossGradients* grads = nullptr);

// Loss of the agent on `batch` and, when `grad` is non-null, its gradient
// with respect to all agent parameters.
LossOutputs agent_loss(const ActorCritic& agent, std::span<const double> params,
                       const Batch& batch, const PpoConfig& config, std::vector<double>* grad);

struct EpisodeRecord {
  std::int64_t global_step = 0;
  int episode_return = 0;
  int length = 0;
  bool truncated = false;

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

struct UpdateDiagnostics {
  std::int64_t update = 0;
  std::int64_t global_step = 0;
  LossOutputs loss;  // last minibatch of the last epoch
  double mean_clip_fraction = 0.0;
  double grad_norm = 0.0;  // pre-clip, last minibatch
};

struct RunRecord {
  std::vector<EpisodeRecord> episodes;
  std::vector<UpdateDiagnostics> updates;
  std::vector<double> initial_params;
  std::vector<double> final_params;
  std::int64_t total_steps = 0;
  std::vector<std::string> rng_states;  // env serve streams, then samplers, then shuffler
};

struct TrainOptions {
  std::optional<std::uint64_t> init_seed;  // defaults to the run seed
  std::function<void(const EpisodeRecord&)> on_episode;
  std::function<void(const UpdateDiagnostics&)> on_update;
  std::ostream* trajectory = nullptr;  // environment 0, one JSON line per step
};

RunRecord train(const backbone::BackboneConfig& backbone, const PpoConfig& config,
                const env::PongPhysics& physics, std::uint64_t seed,
                const TrainOptions& options = {});

// Plays `episodes` full episodes on one environment with a fixed policy and
// returns their returns. A null `params` means uniformly random actions.
std::vector<int> evaluate_policy(const ActorCritic& agent, const std::vector<double>* params,
                                 const env::PongPhysics& physics, int episodes,
                                 std::uint64_t seed);

}  // namespace qpong::ppo
