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

#include "qpong/run_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>

#include <nlohmann/json.hpp>

#include "qpong/error.h"

namespace qpong::ppo {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'Q', 'P', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ConfigError("truncated checkpoint");
  return value;
}

}  // namespace

std::string episode_log_line(const EpisodeRecord& episode) {
  nlohmann::ordered_json j;
  j["global_step"] = episode.global_step;
  j["episode_return"] = episode.episode_return;
  j["episode_length"] = episode.length;
  j["truncated"] = episode.truncated;
  return j.dump();
}

std::string update_log_line(const UpdateDiagnostics& update) {
  nlohmann::ordered_json j;
  j["update"] = update.update;
  j["global_step"] = update.global_step;
  j["loss"] = update.loss.total;
  j["clip_objective"] = update.loss.clip_objective;
  j["value_loss"] = update.loss.value_loss;
  j["entropy"] = update.loss.entropy;
  j["approx_kl"] = update.loss.approx_kl;
  j["clip_fraction"] = update.mean_clip_fraction;
  j["grad_norm"] = update.grad_norm;
  return j.dump();
}

RunLog read_run_log(std::istream& in) {
  RunLog log;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("run log line " + std::to_string(line_no) + ": " + e.what());
    }
    if (j.contains("episode_return")) {
      EpisodeRecord ep;
      ep.global_step = j.at("global_step").get<std::int64_t>();
      ep.episode_return = j.at("episode_return").get<int>();
      ep.length = j.at("episode_length").get<int>();
      ep.truncated = j.value("truncated", false);
      log.episodes.push_back(ep);
    } else if (j.contains("update")) {
      UpdateDiagnostics u;
      u.update = j.at("update").get<std::int64_t>();
      u.global_step = j.at("global_step").get<std::int64_t>();
      u.loss.total = j.at("loss").get<double>();
      u.loss.clip_objective = j.at("clip_objective").get<double>();
      u.loss.value_loss = j.at("value_loss").get<double>();
      u.loss.entropy = j.at("entropy").get<double>();
      u.loss.approx_kl = j.at("approx_kl").get<double>();
      u.mean_clip_fraction = j.at("clip_fraction").get<double>();
      u.loss.clip_fraction = u.mean_clip_fraction;
      u.grad_norm = j.at("grad_norm").get<double>();
      log.updates.push_back(u);
    } else {
      throw ConfigError("run log line " + std::to_string(line_no) + " has an unknown record type");
    }
  }
  return log;
}

RunLog read_run_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run log " + path.string());
  return read_run_log(in);
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, checkpoint.config_hash);
  put<std::int64_t>(out, checkpoint.total_steps);
  put<std::uint64_t>(out, checkpoint.params.size());
  out.write(reinterpret_cast<const char*>(checkpoint.params.data()),
            static_cast<std::streamsize>(checkpoint.params.size() * sizeof(double)));
  put<std::uint64_t>(out, checkpoint.rng_states.size());
  for (const auto& s : checkpoint.rng_states) {
    put<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  if (!out) throw ConfigError("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ConfigError(path.string() + " is not a checkpoint");
  }
  Checkpoint c;
  c.config_hash = get<std::uint64_t>(in);
  c.total_steps = get<std::int64_t>(in);
  const auto n = get<std::uint64_t>(in);
  if (n > (std::uint64_t{1} << 32)) throw ConfigError("implausible checkpoint size");
  c.params.resize(n);
  in.read(reinterpret_cast<char*>(c.params.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw ConfigError("truncated checkpoint");
  const auto m = get<std::uint64_t>(in);
  if (m > 4096) throw ConfigError("implausible checkpoint RNG count");
  for (std::uint64_t k = 0; k < m; ++k) {
    const auto len = get<std::uint64_t>(in);
    if (len > (std::uint64_t{1} << 24)) throw ConfigError("implausible checkpoint RNG state");
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw ConfigError("truncated checkpoint");
    c.rng_states.push_back(std::move(s));
  }
  return c;
}

}  // namespace qpong::ppo
