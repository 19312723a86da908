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

#include "qpong/ppo.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "qpong/error.h"

namespace qpong::ppo {
namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::string describe(const LossOutputs& loss) {
  std::ostringstream out;
  out << "total=" << loss.total << " clip_objective=" << loss.clip_objective
      << " value_loss=" << loss.value_loss << " entropy=" << loss.entropy
      << " approx_kl=" << loss.approx_kl << " clip_fraction=" << loss.clip_fraction;
  return out.str();
}

// Fisher-Yates with an explicit bounded draw so the permutation does not
// depend on the standard library's distribution implementations.
void shuffle(std::vector<std::size_t>& v, nn::Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(nn::uniform01(rng) * static_cast<double>(i));
    std::swap(v[i - 1], v[std::min(j, i - 1)]);
  }
}

std::string serialize(const nn::Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

}  // namespace

void PpoConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(gae_lambda > 0.0 && gae_lambda <= 1.0)) throw ConfigError("gae_lambda must lie in (0, 1]");
  if (!(clip_coef > 0.0)) throw ConfigError("clip_coef must be positive");
  if (!(vf_coef >= 0.0) || !(ent_coef >= 0.0)) throw ConfigError("loss coefficients must be >= 0");
  if (!(learning_rate > 0.0) || !(adam_epsilon > 0.0)) {
    throw ConfigError("learning_rate and adam_epsilon must be positive");
  }
  if (num_envs <= 0 || num_steps <= 0 || update_epochs <= 0 || num_minibatches <= 0) {
    throw ConfigError("num_envs, num_steps, update_epochs and num_minibatches must be positive");
  }
  if (batch_size() % num_minibatches != 0) {
    throw ConfigError("num_envs * num_steps must be divisible by num_minibatches");
  }
  if (total_timesteps < 0) throw ConfigError("total_timesteps must be non-negative");
  if (!(max_grad_norm > 0.0)) throw ConfigError("max_grad_norm must be positive");
}

nn::Rng derive_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return nn::Rng(seq);
}

RolloutBuffer::RolloutBuffer(int steps, int envs) : num_steps(steps), num_envs(envs) {
  const auto n = static_cast<std::size_t>(steps) * static_cast<std::size_t>(envs);
  obs.resize(n);
  actions.resize(n);
  logprobs.resize(n);
  rewards.resize(n);
  dones.resize(n);
  values.resize(n);
}

AdvantageEstimate compute_gae(std::span<const double> rewards, std::span<const double> values,
                              std::span<const double> dones, double bootstrap_value,
                              double bootstrap_done, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw ConfigError("compute_gae: rewards, values and dones must have equal length");
  }
  AdvantageEstimate out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const bool last = t + 1 == n;
    const double next_nonterminal = 1.0 - (last ? bootstrap_done : dones[t + 1]);
    const double next_value = last ? bootstrap_value : values[t + 1];
    const double delta = rewards[t] + gamma * next_value * next_nonterminal - values[t];
    running = delta + gamma * lambda * next_nonterminal * running;
    out.advantages[t] = running;
    out.returns[t] = running + values[t];
  }
  return out;
}

AdvantageEstimate compute_gae(const RolloutBuffer& buffer,
                              std::span<const double> bootstrap_values,
                              std::span<const double> bootstrap_dones, double gamma,
                              double lambda) {
  const auto envs = static_cast<std::size_t>(buffer.num_envs);
  if (bootstrap_values.size() != envs || bootstrap_dones.size() != envs) {
    throw ConfigError("compute_gae: one bootstrap value and done flag per environment");
  }
  AdvantageEstimate out;
  out.advantages.assign(buffer.size(), 0.0);
  out.returns.assign(buffer.size(), 0.0);
  const auto steps = static_cast<std::size_t>(buffer.num_steps);
  std::vector<double> r(steps), v(steps), d(steps);
  for (int e = 0; e < buffer.num_envs; ++e) {
    for (int t = 0; t < buffer.num_steps; ++t) {
      const std::size_t i = buffer.index(t, e);
      r[static_cast<std::size_t>(t)] = buffer.rewards[i];
      v[static_cast<std::size_t>(t)] = buffer.values[i];
      d[static_cast<std::size_t>(t)] = buffer.dones[i];
    }
    const auto column = compute_gae(r, v, d, bootstrap_values[static_cast<std::size_t>(e)],
                                    bootstrap_dones[static_cast<std::size_t>(e)], gamma, lambda);
    for (int t = 0; t < buffer.num_steps; ++t) {
      const std::size_t i = buffer.index(t, e);
      out.advantages[i] = column.advantages[static_cast<std::size_t>(t)];
      out.returns[i] = column.returns[static_cast<std::size_t>(t)];
    }
  }
  return out;
}

void normalize_advantages(std::span<double> advantages) {
  const std::size_t n = advantages.size();
  if (n == 0) return;
  const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  for (double& a : advantages) a -= mean;
  if (n == 1) return;
  double ss = 0.0;
  for (double a : advantages) ss += a * a;
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) return;
  for (double& a : advantages) a /= sd;
}

LossOutputs ppo_loss(const Batch& batch, std::span<const Logits> logits,
                     std::span<const double> values, const PpoConfig& config,
                     LossGradients* grads) {
  const std::size_t n = batch.size();
  if (n == 0) throw ConfigError("ppo_loss: empty batch");
  if (logits.size() != n || values.size() != n || batch.actions.size() != n ||
      batch.old_logprobs.size() != n || batch.old_values.size() != n ||
      batch.advantages.size() != n || batch.returns.size() != n) {
    throw ConfigError("ppo_loss: batch fields and policy outputs must have equal length");
  }
  if (grads) {
    grads->dlogits.assign(n, Logits{});
    grads->dvalues.assign(n, 0.0);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double eps = config.clip_coef;
  LossOutputs out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& z = logits[i];
    const double lse = nn::logsumexp(z);
    const int a = batch.actions[i];
    const double logp = nn::categorical_logprob(z, a);
    const double log_ratio = logp - batch.old_logprobs[i];
    const double ratio = std::exp(log_ratio);
    const double adv = batch.advantages[i];
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    const bool unclipped_active = unclipped <= clipped;
    out.clip_objective += std::min(unclipped, clipped) * inv_n;
    out.approx_kl += ((ratio - 1.0) - log_ratio) * inv_n;
    if (std::abs(ratio - 1.0) > eps) out.clip_fraction += inv_n;

    double entropy = 0.0;
    Logits probs{};
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double lp = z[k] - lse;
      probs[k] = std::exp(lp);
      entropy -= probs[k] * lp;
    }
    out.entropy += entropy * inv_n;

    const double v = values[i];
    const double target = batch.returns[i];
    double dloss_dv = 0.0;
    if (config.clip_vloss) {
      const double v_clipped = batch.old_values[i] + std::clamp(v - batch.old_values[i], -eps, eps);
      const double se = (v - target) * (v - target);
      const double se_clipped = (v_clipped - target) * (v_clipped - target);
      if (se >= se_clipped) {
        out.value_loss += se * inv_n;
        dloss_dv = 2.0 * (v - target);
      } else {
        out.value_loss += se_clipped * inv_n;
        const bool inside = std::abs(v - batch.old_values[i]) < eps;
        dloss_dv = inside ? 2.0 * (v_clipped - target) : 0.0;
      }
    } else {
      out.value_loss += (v - target) * (v - target) * inv_n;
      dloss_dv = 2.0 * (v - target);
    }

    if (grads) {
      const double dtotal_dlogp = unclipped_active ? -unclipped * inv_n : 0.0;
      for (std::size_t k = 0; k < z.size(); ++k) {
        const double onehot = static_cast<int>(k) == a ? 1.0 : 0.0;
        const double lp = z[k] - lse;
        const double dentropy = -probs[k] * (lp + entropy);
        grads->dlogits[i][k] =
            dtotal_dlogp * (onehot - probs[k]) - config.ent_coef * inv_n * dentropy;
      }
      grads->dvalues[i] = config.vf_coef * inv_n * dloss_dv;
    }
  }
  out.total = -(out.clip_objective - config.vf_coef * out.value_loss + config.ent_coef * out.entropy);
  return out;
}

LossOutputs agent_loss(const ActorCritic& agent, std::span<const double> params,
                       const Batch& batch, const PpoConfig& config, std::vector<double>* grad) {
  std::vector<ActorCritic::Output> outputs;
  outputs.reserve(batch.size());
  std::vector<Logits> logits;
  std::vector<double> values;
  logits.reserve(batch.size());
  values.reserve(batch.size());
  for (const auto& obs : batch.obs) {
    outputs.push_back(agent.forward(params, obs));
    logits.push_back(outputs.back().logits);
    values.push_back(outputs.back().value);
  }
  LossGradients loss_grads;
  const LossOutputs loss = ppo_loss(batch, logits, values, config, grad ? &loss_grads : nullptr);
  if (grad) {
    grad->assign(agent.num_params(), 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      agent.backward(params, batch.obs[i], outputs[i], loss_grads.dlogits[i],
                     loss_grads.dvalues[i], *grad);
    }
  }
  return loss;
}

RunRecord train(const backbone::BackboneConfig& backbone, const PpoConfig& config,
                const env::PongPhysics& physics, std::uint64_t seed,
                const TrainOptions& options) {
  config.validate();
  physics.validate();
  const ActorCritic agent(backbone);

  RunRecord record;
  nn::Rng init_rng = derive_rng(options.init_seed.value_or(seed), 1);
  std::vector<double> params = agent.init_params(init_rng);
  record.initial_params = params;

  nn::Adam adam(params.size(), {config.learning_rate, 0.9, 0.999, config.adam_epsilon});
  const auto num_envs = static_cast<std::size_t>(config.num_envs);
  std::vector<env::PongEnv> envs(num_envs, env::PongEnv(physics));
  std::vector<nn::Rng> samplers;
  std::vector<env::Observation> next_obs(num_envs);
  std::vector<double> next_done(num_envs, 0.0);
  for (std::size_t e = 0; e < num_envs; ++e) {
    next_obs[e] = envs[e].reset(derive_rng(seed, 2, e)());
    samplers.push_back(derive_rng(seed, 3, e));
  }
  nn::Rng shuffler = derive_rng(seed, 4);

  std::int64_t global_step = 0;
  const std::int64_t num_updates = config.num_updates();
  std::vector<std::size_t> order(static_cast<std::size_t>(config.batch_size()));
  std::vector<double> grad;

  for (std::int64_t update = 1; update <= num_updates; ++update) {
    RolloutBuffer buffer(config.num_steps, config.num_envs);
    for (int step = 0; step < config.num_steps; ++step) {
      for (std::size_t e = 0; e < num_envs; ++e) {
        const std::size_t i = buffer.index(step, static_cast<int>(e));
        buffer.obs[i] = next_obs[e];
        buffer.dones[i] = next_done[e];
        const auto out = agent.forward(params, next_obs[e]);
        const int action = nn::categorical_sample(out.logits, samplers[e]);
        buffer.actions[i] = action;
        buffer.logprobs[i] = nn::categorical_logprob(out.logits, action);
        buffer.values[i] = out.value;

        const auto result = envs[e].step(static_cast<env::Action>(action));
        ++global_step;
        buffer.rewards[i] = result.reward;
        if (options.trajectory && e == 0) {
          *options.trajectory << env::trajectory_record(next_obs[e], action, result.reward,
                                                        result.done())
                              << '\n';
        }
        if (result.done()) {
          const EpisodeRecord ep{global_step, result.episode->episode_return,
                                 result.episode->length, result.episode->truncated};
          record.episodes.push_back(ep);
          if (options.on_episode) options.on_episode(ep);
          next_obs[e] = envs[e].reset();
          next_done[e] = 1.0;
        } else {
          next_obs[e] = result.obs;
          next_done[e] = 0.0;
        }
      }
    }

    std::vector<double> bootstrap(num_envs);
    for (std::size_t e = 0; e < num_envs; ++e) bootstrap[e] = agent.forward(params, next_obs[e]).value;
    const auto gae = compute_gae(buffer, bootstrap, next_done, config.gamma, config.gae_lambda);

    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto mb_size = static_cast<std::size_t>(config.minibatch_size());
    UpdateDiagnostics diag;
    diag.update = update;
    diag.global_step = global_step;
    double clip_fraction_sum = 0.0;
    int minibatches = 0;
    for (int epoch = 0; epoch < config.update_epochs; ++epoch) {
      shuffle(order, shuffler);
      for (std::size_t start = 0; start < order.size(); start += mb_size) {
        Batch batch;
        for (std::size_t k = start; k < start + mb_size; ++k) {
          const std::size_t i = order[k];
          batch.obs.push_back(buffer.obs[i]);
          batch.actions.push_back(buffer.actions[i]);
          batch.old_logprobs.push_back(buffer.logprobs[i]);
          batch.old_values.push_back(buffer.values[i]);
          batch.advantages.push_back(gae.advantages[i]);
          batch.returns.push_back(gae.returns[i]);
        }
        if (config.norm_adv) normalize_advantages(batch.advantages);
        const LossOutputs loss = agent_loss(agent, params, batch, config, &grad);
        if (!std::isfinite(loss.total) || !all_finite(grad)) {
          throw NumericError("non-finite loss at update " + std::to_string(update) + " epoch " +
                             std::to_string(epoch) + ": " + describe(loss));
        }
        diag.grad_norm = nn::clip_global_norm(grad, config.max_grad_norm);
        adam.step(params, grad);
        if (!all_finite(params)) {
          throw NumericError("non-finite parameters after update " + std::to_string(update) +
                             ": " + describe(loss));
        }
        diag.loss = loss;
        clip_fraction_sum += loss.clip_fraction;
        ++minibatches;
      }
    }
    diag.mean_clip_fraction = clip_fraction_sum / minibatches;
    record.updates.push_back(diag);
    if (options.on_update) options.on_update(diag);
  }

  record.final_params = std::move(params);
  record.total_steps = global_step;
  for (const auto& e : envs) record.rng_states.push_back(e.serialize_rng());
  for (const auto& s : samplers) record.rng_states.push_back(serialize(s));
  record.rng_states.push_back(serialize(shuffler));
  return record;
}

std::vector<int> evaluate_policy(const ActorCritic& agent, const std::vector<double>* params,
                                 const env::PongPhysics& physics, int episodes,
                                 std::uint64_t seed) {
  env::PongEnv pong(physics);
  nn::Rng sampler = derive_rng(seed, 5);
  std::vector<int> returns;
  env::Observation obs = pong.reset(derive_rng(seed, 6)());
  while (static_cast<int>(returns.size()) < episodes) {
    int action = 0;
    if (params) {
      action = nn::categorical_sample(agent.forward(*params, obs).logits, sampler);
    } else {
      action = static_cast<int>(nn::uniform01(sampler) * env::kNumActions);
    }
    const auto result = pong.step(static_cast<env::Action>(action));
    if (result.done()) {
      returns.push_back(result.episode->episode_return);
      obs = pong.reset();
    } else {
      obs = result.obs;
    }
  }
  return returns;
}

}  // namespace qpong::ppo
