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

#include "qpong/pong.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qpong/error.h"
#include "qpong/nn.h"

namespace qpong::env {

void PongPhysics::validate() const {
  if (!(paddle_half_height > 0.0 && paddle_half_height < 1.0)) {
    throw ConfigError("paddle_half_height must lie in (0, 1)");
  }
  if (!(paddle_speed > 0.0) || !(opponent_speed >= 0.0) || !(opponent_dead_zone >= 0.0)) {
    throw ConfigError("paddle speeds must be positive");
  }
  if (!(ball_speed > 0.0) || !(max_ball_speed >= ball_speed) || !(max_ball_speed < 1.0)) {
    throw ConfigError("ball speeds must satisfy 0 < ball_speed <= max_ball_speed < 1");
  }
  if (!(speedup >= 1.0) || !(deflection >= 0.0)) {
    throw ConfigError("speedup must be >= 1 and deflection >= 0");
  }
  if (!(max_serve_angle >= 0.0 && max_serve_angle <= std::numbers::pi / 4)) {
    throw ConfigError("max_serve_angle must lie in [0, pi/4]");
  }
  if (winning_score <= 0 || step_cap <= 0) {
    throw ConfigError("winning_score and step_cap must be positive");
  }
}

PongEnv::PongEnv(PongPhysics physics) : physics_(physics) { physics_.validate(); }

Observation PongEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  return reset();
}

Observation PongEnv::reset() {
  state_ = EnvState{};
  started_ = true;
  serve(nn::uniform01(rng_) < 0.5 ? -1 : 1);
  return observation();
}

void PongEnv::serve(int direction) {
  const double angle = (2.0 * nn::uniform01(rng_) - 1.0) * physics_.max_serve_angle;
  last_serve_angle_ = angle;
  state_.ball_x = 0.0;
  state_.ball_y = 0.0;
  state_.ball_vx = direction * physics_.ball_speed;
  state_.ball_vy = physics_.ball_speed * std::tan(angle);
}

Observation PongEnv::observation() const {
  const double v = physics_.max_ball_speed;
  const double s = physics_.winning_score;
  return {state_.left_paddle,
          state_.right_paddle,
          state_.ball_x,
          state_.ball_y,
          state_.ball_vx / v,
          state_.ball_vy / v,
          state_.score_left / s,
          state_.score_right / s};
}

StepResult PongEnv::step(Action action) {
  if (!started_) throw UsageError("step() called before reset()");
  if (done()) throw UsageError("step() called on a finished episode");

  const PongPhysics& ph = physics_;
  const double paddle_limit = 1.0 - ph.paddle_half_height;
  EnvState& s = state_;

  switch (action) {
    case Action::kUp:
      s.right_paddle += ph.paddle_speed;
      break;
    case Action::kDown:
      s.right_paddle -= ph.paddle_speed;
      break;
    case Action::kStay:
      break;
    default:
      throw ConfigError("unknown action " + std::to_string(static_cast<int>(action)));
  }
  s.right_paddle = std::clamp(s.right_paddle, -paddle_limit, paddle_limit);

  const double gap = s.ball_y - s.left_paddle;
  if (std::abs(gap) > ph.opponent_dead_zone) {
    s.left_paddle += std::copysign(std::min(ph.opponent_speed, std::abs(gap)), gap);
    s.left_paddle = std::clamp(s.left_paddle, -paddle_limit, paddle_limit);
  }

  s.ball_x += s.ball_vx;
  s.ball_y += s.ball_vy;
  if (s.ball_y > 1.0) {
    s.ball_y = 2.0 - s.ball_y;
    s.ball_vy = -s.ball_vy;
  } else if (s.ball_y < -1.0) {
    s.ball_y = -2.0 - s.ball_y;
    s.ball_vy = -s.ball_vy;
  }

  StepResult result;
  auto bounce = [&](double paddle, double wall, double outward) {
    const double offset = s.ball_y - paddle;
    s.ball_x = 2.0 * wall - s.ball_x;
    const double speed = std::min(std::abs(s.ball_vx) * ph.speedup, ph.max_ball_speed);
    s.ball_vx = -outward * speed;
    s.ball_vy = std::clamp(s.ball_vy + offset / ph.paddle_half_height * ph.deflection,
                           -ph.max_ball_speed, ph.max_ball_speed);
  };

  if (s.ball_x >= 1.0) {
    if (std::abs(s.ball_y - s.right_paddle) <= ph.paddle_half_height) {
      bounce(s.right_paddle, 1.0, 1.0);
    } else {
      ++s.score_left;
      result.reward = -1.0;
      result.opponent_reward = 1.0;
      serve(1);
    }
  } else if (s.ball_x <= -1.0) {
    if (std::abs(s.ball_y - s.left_paddle) <= ph.paddle_half_height) {
      bounce(s.left_paddle, -1.0, -1.0);
    } else {
      ++s.score_right;
      result.reward = 1.0;
      result.opponent_reward = -1.0;
      serve(-1);
    }
  }

  ++s.steps;
  s.terminated = std::max(s.score_left, s.score_right) >= ph.winning_score;
  s.truncated = !s.terminated && s.steps >= ph.step_cap;

  result.obs = observation();
  result.terminated = s.terminated;
  result.truncated = s.truncated;
  if (result.done()) {
    result.episode = EpisodeInfo{s.score_right - s.score_left, s.steps, s.score_left,
                                 s.score_right, s.truncated};
  }
  return result;
}

std::string PongEnv::serialize_rng() const {
  std::ostringstream out;
  out << rng_;
  return out.str();
}

void PongEnv::deserialize_rng(const std::string& text) {
  std::istringstream in(text);
  in >> rng_;
  if (!in) throw ConfigError("malformed environment RNG state");
}

int episodic_return(std::span<const double> rewards) {
  double total = 0.0;
  for (double r : rewards) total += r;
  const double rounded = std::round(total);
  if (rounded != total || rounded < -21.0 || rounded > 21.0) {
    throw ConfigError("episodic return " + std::to_string(total) +
                      " is not an integer in [-21, 21]");
  }
  return static_cast<int>(rounded);
}

std::string trajectory_record(const Observation& obs, int action, double reward, bool done) {
  nlohmann::json j;
  j["obs"] = obs;
  j["action"] = action;
  j["reward"] = reward;
  j["done"] = done;
  return j.dump();
}

std::string render_frame(const Observation& obs, const PongPhysics& physics, int width,
                         int height) {
  std::vector<std::string> grid(static_cast<std::size_t>(height),
                                std::string(static_cast<std::size_t>(width), ' '));
  auto row_of = [&](double y) {
    const double t = (1.0 - y) / 2.0;
    return std::clamp(static_cast<int>(t * height), 0, height - 1);
  };
  auto col_of = [&](double x) {
    const double t = (x + 1.0) / 2.0;
    return std::clamp(static_cast<int>(t * width), 0, width - 1);
  };
  for (int r = row_of(obs[0] + physics.paddle_half_height);
       r <= row_of(obs[0] - physics.paddle_half_height); ++r) {
    grid[static_cast<std::size_t>(r)][0] = '|';
  }
  for (int r = row_of(obs[1] + physics.paddle_half_height);
       r <= row_of(obs[1] - physics.paddle_half_height); ++r) {
    grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(width - 1)] = '|';
  }
  grid[static_cast<std::size_t>(row_of(obs[3]))][static_cast<std::size_t>(col_of(obs[2]))] = 'o';

  std::ostringstream out;
  const std::string border = "+" + std::string(static_cast<std::size_t>(width), '-') + "+\n";
  out << border;
  for (const auto& line : grid) out << '|' << line << "|\n";
  out << border;
  out << "  left " << std::lround(obs[6] * physics.winning_score) << " : "
      << std::lround(obs[7] * physics.winning_score) << " right\n";
  return out.str();
}

}  // namespace qpong::env
