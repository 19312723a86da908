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

// Post-hoc analytics over trained runs: linear centred kernel alignment
// between backbone representations, debiased EMA smoothing of return
// curves, and cross-seed summary statistics.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qpong/backbone.h"
#include "qpong/pong.h"
#include "qpong/ppo.h"

namespace qpong::analysis {

// n x p, one row per probe observation.
using RepresentationMatrix = Eigen::MatrixXd;

RepresentationMatrix center_columns(const RepresentationMatrix& m);

// ||Y^T X||_F^2 / (||X^T X||_F ||Y^T Y||_F) after centering. Throws
// NumericError when either input has zero variance.
double linear_cka(const RepresentationMatrix& x, const RepresentationMatrix& y);

inline constexpr std::uint64_t kDefaultProbeSeed = 20240917;
inline constexpr std::size_t kDefaultProbeCount = 2048;

struct ProbeSet {
  std::vector<env::Observation> observations;
  std::uint64_t seed = 0;
  std::string policy = "uniform-random";

  // FNV-1a over the raw observation bytes.
  std::uint64_t digest() const;
  friend bool operator==(const ProbeSet&, const ProbeSet&) = default;
};

// Observations visited by a uniform-random policy, one per step.
ProbeSet make_probe_set(const env::PongPhysics& physics, std::size_t count = kDefaultProbeCount,
                        std::uint64_t seed = kDefaultProbeSeed);
void write_probe_set(const std::filesystem::path& path, const ProbeSet& probes);
ProbeSet read_probe_set(const std::filesystem::path& path);

RepresentationMatrix representations(const backbone::Backbone& backbone,
                                      std::span<const double> backbone_params,
                                      const ProbeSet& probes);

struct CkaRun {
  std::string label;
  std::string group;
  backbone::BackboneConfig config;
  std::vector<double> backbone_params;
  // When set, must equal the digest of the probe set being used.
  std::optional<std::uint64_t> probe_digest;
};

struct CkaHeatmap {
  std::vector<std::string> labels;
  std::vector<std::string> groups;
  Eigen::MatrixXd similarity;
};

CkaHeatmap cka_heatmap(const std::vector<CkaRun>& runs, const ProbeSet& probes);
// Pairwise CKA over precomputed representations with equal row counts.
Eigen::MatrixXd cka_matrix(const std::vector<RepresentationMatrix>& reps);
std::string to_json(const CkaHeatmap& heatmap);

struct StepValue {
  std::int64_t step = 0;
  double value = 0.0;
};

// m_k = alpha m_{k-1} + (1 - alpha) y_k, reported as m_k / (1 - alpha^{k+1}).
std::vector<StepValue> ema_smooth(std::span<const StepValue> series, double alpha);

struct RunSeries {
  std::vector<ppo::EpisodeRecord> episodes;
  std::int64_t total_steps = 0;
};

struct AggregateOptions {
  double tail_fraction = 0.05;
  double ema_alpha = 0.95;
  int grid_points = 100;
};

struct SummaryRow {
  std::string backbone;  // slug
  std::string kind;
  std::size_t param_count = 0;
  int num_runs = 0;
  double final_mean = 0.0;
  double final_std = 0.0;  // population standard deviation across runs
  int final_max = 0;       // raw, unsmoothed
  // Episode lengths over the tail windows of all runs.
  double length_mean = 0.0;
  double length_std = 0.0;
  int length_max = 0;
  int length_min = 0;
};

struct CurvePoint {
  std::int64_t step = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct Aggregate {
  SummaryRow row;
  std::vector<CurvePoint> curve;
};

// Throws UsageError when `runs` is empty or a run has no finished episode.
Aggregate aggregate_runs(const backbone::BackboneConfig& config, std::span<const RunSeries> runs,
                         const AggregateOptions& options = {});

std::string summary_csv_header();
std::string summary_csv_row(const SummaryRow& row);
std::string episode_length_csv_header();
std::string episode_length_csv_row(const SummaryRow& row);
std::string curve_csv(std::span<const CurvePoint> curve);

// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace qpong::analysis
