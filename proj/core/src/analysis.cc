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

#include "qpong/analysis.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qpong/error.h"
#include "qpong/nn.h"

namespace qpong::analysis {
namespace {

constexpr char kProbeMagic[8] = {'Q', 'P', 'P', 'R', 'O', 'B', 'E', '1'};

double population_std(std::span<const double> xs, double mean) {
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ConfigError("truncated probe file");
  return value;
}

}  // namespace

RepresentationMatrix center_columns(const RepresentationMatrix& m) {
  if (m.rows() < 2) throw ConfigError("centering needs at least two rows");
  return m.rowwise() - m.colwise().mean();
}

double linear_cka(const RepresentationMatrix& x, const RepresentationMatrix& y) {
  if (x.rows() != y.rows()) {
    throw ConfigError("CKA inputs must describe the same number of inputs");
  }
  if (!x.allFinite() || !y.allFinite()) throw NumericError("CKA input has non-finite entries");
  const RepresentationMatrix xc = center_columns(x);
  const RepresentationMatrix yc = center_columns(y);
  constexpr double kRelTol = 1e-12;
  if (xc.norm() <= kRelTol * std::max(1.0, x.norm()) ||
      yc.norm() <= kRelTol * std::max(1.0, y.norm())) {
    throw NumericError("CKA is undefined for zero-variance representations");
  }
  const double cross = (yc.transpose() * xc).squaredNorm();
  const double self_x = (xc.transpose() * xc).norm();
  const double self_y = (yc.transpose() * yc).norm();
  return cross / (self_x * self_y);
}

std::uint64_t ProbeSet::digest() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& obs : observations) {
    for (double v : obs) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xFFU;
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

ProbeSet make_probe_set(const env::PongPhysics& physics, std::size_t count, std::uint64_t seed) {
  ProbeSet probes;
  probes.seed = seed;
  env::PongEnv pong(physics);
  nn::Rng policy = ppo::derive_rng(seed, 7);
  env::Observation obs = pong.reset(seed);
  while (probes.observations.size() < count) {
    probes.observations.push_back(obs);
    const int action = static_cast<int>(nn::uniform01(policy) * env::kNumActions);
    const auto result = pong.step(static_cast<env::Action>(action));
    obs = result.done() ? pong.reset() : result.obs;
  }
  return probes;
}

void write_probe_set(const std::filesystem::path& path, const ProbeSet& probes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write probe set " + path.string());
  out.write(kProbeMagic, sizeof(kProbeMagic));
  put<std::uint64_t>(out, probes.seed);
  put<std::uint64_t>(out, probes.policy.size());
  out.write(probes.policy.data(), static_cast<std::streamsize>(probes.policy.size()));
  put<std::uint64_t>(out, probes.observations.size());
  for (const auto& obs : probes.observations) {
    out.write(reinterpret_cast<const char*>(obs.data()),
              static_cast<std::streamsize>(obs.size() * sizeof(double)));
  }
  if (!out) throw ConfigError("failed writing probe set " + path.string());
}

ProbeSet read_probe_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open probe set " + path.string());
  char magic[sizeof(kProbeMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kProbeMagic, sizeof(magic)) != 0) {
    throw ConfigError(path.string() + " is not a probe set");
  }
  ProbeSet probes;
  probes.seed = get<std::uint64_t>(in);
  const auto policy_len = get<std::uint64_t>(in);
  if (policy_len > 1024) throw ConfigError("implausible probe policy name");
  probes.policy.resize(policy_len);
  in.read(probes.policy.data(), static_cast<std::streamsize>(policy_len));
  const auto count = get<std::uint64_t>(in);
  if (count > (std::uint64_t{1} << 28)) throw ConfigError("implausible probe count");
  probes.observations.resize(count);
  for (auto& obs : probes.observations) {
    in.read(reinterpret_cast<char*>(obs.data()),
            static_cast<std::streamsize>(obs.size() * sizeof(double)));
  }
  if (!in) throw ConfigError("truncated probe file");
  return probes;
}

RepresentationMatrix representations(const backbone::Backbone& backbone,
                                      std::span<const double> backbone_params,
                                      const ProbeSet& probes) {
  RepresentationMatrix reps(static_cast<Eigen::Index>(probes.observations.size()),
                            backbone::kFeatureDim);
  for (std::size_t i = 0; i < probes.observations.size(); ++i) {
    const auto f = backbone.forward(backbone_params, probes.observations[i]);
    for (int k = 0; k < backbone::kFeatureDim; ++k) {
      reps(static_cast<Eigen::Index>(i), k) = f[static_cast<std::size_t>(k)];
    }
  }
  return reps;
}

Eigen::MatrixXd cka_matrix(const std::vector<RepresentationMatrix>& reps) {
  const auto n = static_cast<Eigen::Index>(reps.size());
  for (const auto& r : reps) {
    if (r.rows() != reps.front().rows()) {
      throw ConfigError("all representations must be evaluated on the same probes");
    }
  }
  Eigen::MatrixXd sim(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sim(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      sim(i, j) = linear_cka(reps[static_cast<std::size_t>(i)], reps[static_cast<std::size_t>(j)]);
      sim(j, i) = sim(i, j);
    }
  }
  return sim;
}

CkaHeatmap cka_heatmap(const std::vector<CkaRun>& runs, const ProbeSet& probes) {
  if (probes.observations.size() < 2) throw ConfigError("probe set needs at least two inputs");
  const std::uint64_t digest = probes.digest();
  CkaHeatmap heatmap;
  std::vector<RepresentationMatrix> reps;
  for (const auto& run : runs) {
    if (run.probe_digest && *run.probe_digest != digest) {
      throw ConfigError("run " + run.label + " was registered against a different probe set");
    }
    const backbone::Backbone bb(run.config);
    reps.push_back(representations(bb, run.backbone_params, probes));
    heatmap.labels.push_back(run.label);
    heatmap.groups.push_back(run.group);
  }
  heatmap.similarity = cka_matrix(reps);
  return heatmap;
}

std::string to_json(const CkaHeatmap& heatmap) {
  nlohmann::ordered_json j;
  j["labels"] = heatmap.labels;
  j["groups"] = heatmap.groups;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < heatmap.similarity.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(heatmap.similarity.cols()));
    for (Eigen::Index k = 0; k < heatmap.similarity.cols(); ++k) {
      row[static_cast<std::size_t>(k)] = heatmap.similarity(i, k);
    }
    rows.push_back(row);
  }
  j["similarity"] = rows;
  return j.dump(2);
}

std::vector<StepValue> ema_smooth(std::span<const StepValue> series, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("EMA weight must lie in (0, 1)");
  std::vector<StepValue> out;
  out.reserve(series.size());
  double m = 0.0;
  double weight = 1.0;  // alpha^{k+1}
  for (const StepValue& p : series) {
    m = alpha * m + (1.0 - alpha) * p.value;
    weight *= alpha;
    out.push_back({p.step, m / (1.0 - weight)});
  }
  return out;
}

Aggregate aggregate_runs(const backbone::BackboneConfig& config, std::span<const RunSeries> runs,
                         const AggregateOptions& options) {
  if (runs.empty()) throw UsageError("aggregate_runs needs at least one run");
  if (!(options.tail_fraction > 0.0 && options.tail_fraction <= 1.0)) {
    throw ConfigError("tail_fraction must lie in (0, 1]");
  }
  if (options.grid_points <= 0) throw ConfigError("grid_points must be positive");

  Aggregate agg;
  agg.row.backbone = config.slug();
  agg.row.kind = std::string(backbone::to_string(config.kind));
  agg.row.param_count = backbone::parameter_count(config);
  agg.row.num_runs = static_cast<int>(runs.size());

  std::vector<double> finals;
  std::vector<double> tail_lengths;
  int raw_max = std::numeric_limits<int>::min();
  std::vector<std::vector<StepValue>> smoothed;
  std::int64_t horizon = 0;

  for (const RunSeries& run : runs) {
    if (run.episodes.empty()) throw UsageError("a run has no finished episodes");
    std::vector<StepValue> series;
    series.reserve(run.episodes.size());
    for (const auto& ep : run.episodes) series.push_back({ep.global_step, double(ep.episode_return)});
    smoothed.push_back(ema_smooth(series, options.ema_alpha));
    finals.push_back(smoothed.back().back().value);

    const std::int64_t total = std::max(run.total_steps, run.episodes.back().global_step);
    horizon = std::max(horizon, total);
    const double threshold = static_cast<double>(total) * (1.0 - options.tail_fraction);
    bool any = false;
    for (const auto& ep : run.episodes) {
      if (static_cast<double>(ep.global_step) > threshold) {
        any = true;
        raw_max = std::max(raw_max, ep.episode_return);
        tail_lengths.push_back(ep.length);
      }
    }
    if (!any) {
      raw_max = std::max(raw_max, run.episodes.back().episode_return);
      tail_lengths.push_back(run.episodes.back().length);
    }
  }

  agg.row.final_mean = mean_of(finals);
  agg.row.final_std = population_std(finals, agg.row.final_mean);
  agg.row.final_max = raw_max;
  agg.row.length_mean = mean_of(tail_lengths);
  agg.row.length_std = population_std(tail_lengths, agg.row.length_mean);
  agg.row.length_max = static_cast<int>(*std::max_element(tail_lengths.begin(), tail_lengths.end()));
  agg.row.length_min = static_cast<int>(*std::min_element(tail_lengths.begin(), tail_lengths.end()));

  const std::int64_t stride = std::max<std::int64_t>(1, (horizon + options.grid_points - 1) /
                                                            options.grid_points);
  std::vector<std::size_t> cursor(smoothed.size(), 0);
  for (std::int64_t step = stride; step <= stride * options.grid_points; step += stride) {
    CurvePoint point{step, 0.0, std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity()};
    int count = 0;
    for (std::size_t r = 0; r < smoothed.size(); ++r) {
      const auto& s = smoothed[r];
      while (cursor[r] < s.size() && s[cursor[r]].step <= step) ++cursor[r];
      if (cursor[r] == 0) continue;
      const double v = s[cursor[r] - 1].value;
      point.mean += v;
      point.min = std::min(point.min, v);
      point.max = std::max(point.max, v);
      ++count;
    }
    if (count == 0) continue;
    point.mean /= count;
    agg.curve.push_back(point);
  }
  return agg;
}

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

std::string summary_csv_header() {
  return "backbone,kind,param_num,num_runs,final_return_mean,final_return_std,final_return_max";
}

std::string summary_csv_row(const SummaryRow& row) {
  std::ostringstream out;
  out << row.backbone << ',' << row.kind << ',' << row.param_count << ',' << row.num_runs << ','
      << format_double(row.final_mean) << ',' << format_double(row.final_std) << ','
      << row.final_max;
  return out.str();
}

std::string episode_length_csv_header() {
  return "backbone,kind,param_num,length_mean,length_std,length_max,length_min";
}

std::string episode_length_csv_row(const SummaryRow& row) {
  std::ostringstream out;
  out << row.backbone << ',' << row.kind << ',' << row.param_count << ','
      << format_double(row.length_mean) << ',' << format_double(row.length_std) << ','
      << row.length_max << ',' << row.length_min;
  return out.str();
}

std::string curve_csv(std::span<const CurvePoint> curve) {
  std::ostringstream out;
  out << "step,mean,min,max\n";
  for (const auto& p : curve) {
    out << p.step << ',' << format_double(p.mean) << ',' << format_double(p.min) << ','
        << format_double(p.max) << '\n';
  }
  return out.str();
}

}  // namespace qpong::analysis
