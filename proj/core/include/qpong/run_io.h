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

// On-disk artifacts of a training run: the line-delimited JSON run log and
// the binary checkpoint.
//
// Run log lines are either
//   {"global_step":..,"episode_return":..,"episode_length":..,"truncated":..}
// for a finished episode, or
//   {"update":..,"global_step":..,"loss":..,"clip_objective":..,...}
// with the loss diagnostics of one PPO iteration.
//
// Checkpoint layout (little-endian):
//   "QPCKPT01" | u64 config_hash | i64 total_steps | u64 n | n x f64 params
//   | u64 m | m x (u64 length, bytes) rng states

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qpong/ppo.h"

namespace qpong::ppo {

std::string episode_log_line(const EpisodeRecord& episode);
std::string update_log_line(const UpdateDiagnostics& update);

struct RunLog {
  std::vector<EpisodeRecord> episodes;
  std::vector<UpdateDiagnostics> updates;
};

RunLog read_run_log(std::istream& in);
RunLog read_run_log(const std::filesystem::path& path);

struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::int64_t total_steps = 0;
  std::vector<double> params;
  std::vector<std::string> rng_states;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace qpong::ppo
