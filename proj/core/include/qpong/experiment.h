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

// Experiment orchestration: an INI-style config describing a matrix of
// (backbone, seed) cells, the on-disk layout of run artifacts, and the
// train/analyze drivers used by the command-line tool.
//
// Layout under the output directory:
//   manifest.json                  one entry per (config, seed) cell
//   <slug>/<seed>/run.jsonl        run log
//   <slug>/<seed>/checkpoint.bin   final parameters and RNG states
//   <slug>/<seed>/cell.json        manifest fragment incl. the cell config
//   <slug>/<seed>/trajectory.jsonl optional, environment 0
//   <slug>/<seed>/error.txt        only for failed cells
//   analysis/                      written by analyze

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qpong/analysis.h"
#include "qpong/backbone.h"
#include "qpong/pong.h"
#include "qpong/ppo.h"

namespace qpong::experiment {

inline constexpr const char* kOutputEnvVar = "QPONG_OUT";
std::string engine_version();

enum class InitSeedPolicy { kRunSeed, kFixed };

struct BackboneSection {
  backbone::Topology topology = backbone::Topology::kRing;
  InitSeedPolicy init_seed_policy = InitSeedPolicy::kRunSeed;
  std::uint64_t init_seed = 0;  // used with kFixed

  friend bool operator==(const BackboneSection&, const BackboneSection&) = default;
};

struct Cell {
  backbone::BackboneConfig backbone;
  std::uint64_t seed = 0;
  std::uint64_t init_seed = 0;
  std::string slug;
  std::uint64_t config_hash = 0;
  std::size_t param_count = 0;

  std::string id() const { return slug + "/" + std::to_string(seed); }
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string output_dir;  // empty: $QPONG_OUT, then "runs"
  bool dump_trajectory = false;
  env::PongPhysics environment;
  BackboneSection backbone;
  ppo::PpoConfig ppo;
  std::vector<backbone::BackboneConfig> configs;
  std::vector<std::uint64_t> seeds;

  // Throws ConfigError on syntax errors, unknown sections or keys, and
  // invalid values.
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string serialize() const;

  void validate() const;
  std::vector<Cell> cells() const;
  // Configuration restricted to a single cell.
  ExperimentConfig for_cell(const Cell& cell) const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Hash of everything that determines a cell's result apart from its seed.
std::uint64_t cell_config_hash(const ExperimentConfig& config,
                               const backbone::BackboneConfig& backbone);

std::filesystem::path resolve_output_dir(const ExperimentConfig* config,
                                         const std::optional<std::filesystem::path>& flag);

struct ManifestEntry {
  std::string slug;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::string status;  // "completed" or "failed"
  std::string log;     // paths relative to the output directory
  std::string checkpoint;
  std::string fragment;
  std::string trajectory;
  std::string error_log;
  double wall_clock_seconds = 0.0;
  std::string engine_version;
  std::string error;

  std::vector<std::string> files() const;
};

class Manifest {
 public:
  static Manifest load(const std::filesystem::path& output_dir);
  // Writes to a temporary file and renames it over manifest.json.
  void save(const std::filesystem::path& output_dir) const;

  const ManifestEntry* find(const std::string& slug, std::uint64_t seed) const;
  void upsert(ManifestEntry entry);
  const std::vector<ManifestEntry>& entries() const { return entries_; }

 private:
  std::vector<ManifestEntry> entries_;  // sorted by (slug, seed)
};

struct RunOptions {
  std::optional<std::string> filter;  // regex searched in "<slug>/<seed>"
  int jobs = 1;
  bool force = false;
  std::filesystem::path output_dir;
  std::ostream* progress = nullptr;
};

struct TrainSummary {
  int selected = 0;
  int executed = 0;
  int skipped = 0;
  int failed = 0;
};

TrainSummary run_experiment(const ExperimentConfig& config, const RunOptions& options);

// Trains one cell into `cell_dir` and returns its manifest entry. Exceptions
// propagate; run_experiment turns them into failed entries.
ManifestEntry train_cell(const ExperimentConfig& config, const Cell& cell,
                         const std::filesystem::path& output_dir);

struct AnalyzeOptions {
  analysis::AggregateOptions aggregate;
  std::size_t probe_count = analysis::kDefaultProbeCount;
  std::uint64_t probe_seed = analysis::kDefaultProbeSeed;
  bool cka = true;
  std::ostream* progress = nullptr;
};

struct AnalyzeResult {
  std::vector<analysis::SummaryRow> rows;
  std::vector<std::string> cka_labels;
  std::vector<std::string> skipped;  // runs left out of the CKA matrix
};

// Throws UsageError when the directory has no completed runs.
AnalyzeResult analyze_experiment(const std::filesystem::path& output_dir,
                                 const AnalyzeOptions& options = {});

// Renders every `every`-th step of a trajectory dump, at most `limit`
// frames (0 = no limit). Returns the number of frames written.
int replay_trajectory(std::istream& in, std::ostream& out, const env::PongPhysics& physics,
                      int every = 1, int limit = 0);

}  // namespace qpong::experiment
