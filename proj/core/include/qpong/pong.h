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

// Two-player Pong on the normalized board [-1, 1]^2. The learning agent
// controls the right paddle; a scripted tracker controls the left one. A
// point ends when the ball leaves through the left or right edge; the first
// side to reach the winning score ends the episode.

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace qpong::env {

enum class Action : int { kUp = 0, kStay = 1, kDown = 2 };
inline constexpr int kNumActions = 3;

// [p_l, p_r, b_x, b_y, v_bx, v_by, s_l, s_r]; velocities are divided by the
// ball speed cap and scores by the winning score.
using Observation = std::array<double, 8>;

struct PongPhysics {
  double paddle_half_height = 0.2;
  double paddle_speed = 0.05;
  double ball_speed = 0.04;
  double speedup = 1.05;
  double max_ball_speed = 0.12;
  double deflection = 0.04;
  double opponent_speed = 0.04;
  double opponent_dead_zone = 0.05;
  double max_serve_angle = std::numbers::pi / 4;
  int winning_score = 21;
  int step_cap = 10000;

  void validate() const;
  friend bool operator==(const PongPhysics&, const PongPhysics&) = default;
};

struct EnvState {
  double left_paddle = 0.0;
  double right_paddle = 0.0;
  double ball_x = 0.0;
  double ball_y = 0.0;
  double ball_vx = 0.0;
  double ball_vy = 0.0;
  int score_left = 0;
  int score_right = 0;
  int steps = 0;
  bool terminated = false;
  bool truncated = false;
};

struct EpisodeInfo {
  int episode_return = 0;
  int length = 0;
  int score_left = 0;
  int score_right = 0;
  bool truncated = false;
};

struct StepResult {
  Observation obs{};
  double reward = 0.0;           // right paddle (agent)
  double opponent_reward = 0.0;  // left paddle
  bool terminated = false;
  bool truncated = false;
  std::optional<EpisodeInfo> episode;  // set on the final step

  bool done() const { return terminated || truncated; }
};

class PongEnv {
 public:
  explicit PongEnv(PongPhysics physics = {});

  // Reseeds the serve generator and starts a new episode.
  Observation reset(std::uint64_t seed);
  // Starts a new episode continuing the current serve stream.
  Observation reset();

  // Throws UsageError when the episode is already over.
  StepResult step(Action action);

  const EnvState& state() const { return state_; }
  const PongPhysics& physics() const { return physics_; }
  Observation observation() const;
  bool done() const { return state_.terminated || state_.truncated; }
  // Serve angle of the most recent serve, in radians.
  double last_serve_angle() const { return last_serve_angle_; }

  std::string serialize_rng() const;
  void deserialize_rng(const std::string& text);

 private:
  void serve(int direction);

  PongPhysics physics_;
  EnvState state_;
  std::mt19937_64 rng_;
  double last_serve_angle_ = 0.0;
  bool started_ = false;
};

// Sum of a complete episode's rewards. Throws ConfigError when the result is
// not an integer in [-21, 21].
int episodic_return(std::span<const double> rewards);

// One line of a trajectory dump.
std::string trajectory_record(const Observation& obs, int action, double reward, bool done);

// ASCII rendering of an observation; `width` x `height` cells plus a score
// line.
std::string render_frame(const Observation& obs, const PongPhysics& physics, int width = 48,
                         int height = 16);

}  // namespace qpong::env
