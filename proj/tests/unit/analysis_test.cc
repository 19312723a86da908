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

#include <cmath>
#include <filesystem>
#include <random>

#include <Eigen/QR>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "qpong/error.h"

namespace qpong::analysis {
namespace {

using backbone::BackboneConfig;
using backbone::BackboneKind;

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = normal(rng);
  }
  return m;
}

// Kernel-form oracle: HSIC(K, L) / sqrt(HSIC(K, K) HSIC(L, L)) with
// K = X X^T, L = Y Y^T and centring matrix H.
double hsic_cka(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const auto n = x.rows();
  const Eigen::MatrixXd h =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd k = h * x * x.transpose() * h;
  const Eigen::MatrixXd l = h * y * y.transpose() * h;
  const double kl = (k.cwiseProduct(l)).sum();
  const double kk = (k.cwiseProduct(k)).sum();
  const double ll = (l.cwiseProduct(l)).sum();
  return kl / std::sqrt(kk * ll);
}

TEST(Cka, SelfSimilarityIsOne) {
  std::mt19937_64 rng(1);
  const auto x = random_matrix(rng, 50, 8);
  EXPECT_NEAR(linear_cka(x, x), 1.0, 1e-12);
}

TEST(Cka, InvariantToOrthogonalTransformAndIsotropicScale) {
  std::mt19937_64 rng(2);
  const auto x = random_matrix(rng, 60, 6);
  const auto y = random_matrix(rng, 60, 4);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(rng, 6, 6)).householderQ();
  const double base = linear_cka(x, y);
  EXPECT_NEAR(linear_cka(x * q * 3.5, y), base, 1e-12);
  EXPECT_NEAR(linear_cka(x, y * 0.01), base, 1e-12);
  EXPECT_NEAR(linear_cka(x.rowwise() + Eigen::RowVectorXd::Constant(6, 4.0), y), base, 1e-12);
}

TEST(Cka, SymmetricBoundedAndMatchesHsicOracle) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto x = random_matrix(rng, 30, 5);
    Eigen::MatrixXd y = random_matrix(rng, 30, 3);
    if (i % 2 == 0) y.col(0) += 2.0 * x.col(1);
    const double xy = linear_cka(x, y);
    EXPECT_NEAR(xy, linear_cka(y, x), 1e-13);
    EXPECT_GE(xy, -1e-15);
    EXPECT_LE(xy, 1.0 + 1e-12);
    EXPECT_NEAR(xy, hsic_cka(x, y), 1e-10);
  }
}

TEST(Cka, ZeroVarianceAndShapeErrors) {
  std::mt19937_64 rng(4);
  const auto x = random_matrix(rng, 10, 3);
  EXPECT_THROW(linear_cka(x, Eigen::MatrixXd::Constant(10, 2, 0.7)), NumericError);
  EXPECT_THROW(linear_cka(x, random_matrix(rng, 11, 3)), ConfigError);
}

TEST(Cka, MatrixIsSymmetricWithUnitDiagonal) {
  std::mt19937_64 rng(5);
  const std::vector<RepresentationMatrix> reps{random_matrix(rng, 40, 8), random_matrix(rng, 40, 8),
                                               random_matrix(rng, 40, 2)};
  const auto m = cka_matrix(reps);
  ASSERT_EQ(m.rows(), 3);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(m(i, i), 1.0, 1e-12);
    for (int j = 0; j < 3; ++j) EXPECT_EQ(m(i, j), m(j, i));
  }
}

TEST(Probes, DeterministicAndRoundTrip) {
  const auto a = make_probe_set({}, 64);
  const auto b = make_probe_set({}, 64);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.seed, kDefaultProbeSeed);
  EXPECT_EQ(a.observations.size(), 64u);
  EXPECT_NE(a.digest(), make_probe_set({}, 64, 1).digest());
  const auto path = std::filesystem::temp_directory_path() / "qpong_probes_test.bin";
  write_probe_set(path, a);
  EXPECT_EQ(read_probe_set(path), a);
  std::filesystem::remove(path);
}

TEST(Heatmap, LabelsGroupsAndProbeMismatch) {
  const auto probes = make_probe_set({}, 128);
  std::mt19937_64 rng(6);
  std::vector<CkaRun> runs;
  for (auto [spec, label] : {std::pair{"cz:1", "a"}, std::pair{"mlp:4", "b"}}) {
    CkaRun run;
    run.label = label;
    run.config = backbone::parse_backbone_spec(spec);
    run.group = run.config.slug();
    std::normal_distribution<double> normal(0.0, 0.5);
    run.backbone_params.resize(backbone::parameter_count(run.config));
    for (auto& p : run.backbone_params) p = normal(rng);
    run.probe_digest = probes.digest();
    runs.push_back(run);
  }
  const auto heat = cka_heatmap(runs, probes);
  EXPECT_EQ(heat.labels, (std::vector<std::string>{"a", "b"}));
  const auto j = nlohmann::json::parse(to_json(heat));
  EXPECT_EQ(j.at("similarity").size(), 2u);
  EXPECT_EQ(j.at("groups")[1], runs[1].group);

  runs[1].probe_digest = probes.digest() + 1;
  EXPECT_THROW(cka_heatmap(runs, probes), ConfigError);
}

TEST(Ema, DebiasedExample) {
  const std::vector<StepValue> s{{1, 0.0}, {2, 10.0}};
  const auto out = ema_smooth(s, 0.5);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_DOUBLE_EQ(out[0].value, 0.0);
  EXPECT_NEAR(out[1].value, 20.0 / 3.0, 1e-12);
  EXPECT_EQ(out[1].step, 2);
}

TEST(Ema, ConstantSeriesIsUnchanged) {
  std::vector<StepValue> s;
  for (int i = 0; i < 50; ++i) s.push_back({i, -20.0});
  for (const auto& p : ema_smooth(s, 0.95)) EXPECT_NEAR(p.value, -20.0, 1e-12);
  EXPECT_THROW(ema_smooth(s, 1.0), ConfigError);
  EXPECT_THROW(ema_smooth(s, 0.0), ConfigError);
}

RunSeries series(std::vector<ppo::EpisodeRecord> eps, std::int64_t total) { return {std::move(eps), total}; }

TEST(Aggregate, FinalStatsUsePopulationStd) {
  const BackboneConfig cfg{BackboneKind::kCZEntangled, 1, 0};
  // Single-episode runs: the smoothed final value equals the raw return.
  const std::vector<RunSeries> runs{series({{100, -21, 100, false}}, 100),
                                    series({{100, -19, 120, false}}, 100)};
  const auto agg = aggregate_runs(cfg, runs);
  EXPECT_EQ(agg.row.backbone, "cz-L1");
  EXPECT_EQ(agg.row.param_count, 48u);
  EXPECT_EQ(agg.row.num_runs, 2);
  EXPECT_DOUBLE_EQ(agg.row.final_mean, -20.0);
  EXPECT_DOUBLE_EQ(agg.row.final_std, 1.0);
  EXPECT_EQ(agg.row.final_max, -19);
  EXPECT_DOUBLE_EQ(agg.row.length_mean, 110.0);
  EXPECT_DOUBLE_EQ(agg.row.length_std, 10.0);
  EXPECT_EQ(agg.row.length_max, 120);
  EXPECT_EQ(agg.row.length_min, 100);
}

TEST(Aggregate, TailWindowAndCurveGrid) {
  const BackboneConfig cfg{BackboneKind::kSeparable, 2, 0};
  std::vector<ppo::EpisodeRecord> eps;
  for (int i = 1; i <= 100; ++i) eps.push_back({i * 100, i == 100 ? 5 : -21, 100, false});
  AggregateOptions opt;
  opt.tail_fraction = 0.05;
  opt.grid_points = 10;
  const auto agg = aggregate_runs(cfg, std::vector<RunSeries>{series(eps, 10000)}, opt);
  // Raw max over the last 5% of steps (episodes 96..100).
  EXPECT_EQ(agg.row.final_max, 5);
  EXPECT_EQ(agg.row.length_mean, 100.0);
  ASSERT_EQ(agg.curve.size(), 10u);
  EXPECT_EQ(agg.curve.front().step, 1000);
  EXPECT_EQ(agg.curve.back().step, 10000);
  EXPECT_NEAR(agg.curve.front().mean, -21.0, 1e-9);
  EXPECT_GT(agg.curve.back().mean, -21.0);
}

TEST(Aggregate, CurveMinMaxAcrossRuns) {
  const BackboneConfig cfg{BackboneKind::kClassicalMLP, 0, 4};
  const std::vector<RunSeries> runs{series({{10, -21, 10, false}}, 20),
                                    series({{10, -1, 10, false}}, 20)};
  AggregateOptions opt;
  opt.grid_points = 2;
  const auto agg = aggregate_runs(cfg, runs, opt);
  ASSERT_EQ(agg.curve.size(), 2u);
  EXPECT_DOUBLE_EQ(agg.curve[0].mean, -11.0);
  EXPECT_DOUBLE_EQ(agg.curve[0].min, -21.0);
  EXPECT_DOUBLE_EQ(agg.curve[0].max, -1.0);
}

TEST(Aggregate, EmptyInputsAreUsageErrors) {
  const BackboneConfig cfg{BackboneKind::kCZEntangled, 1, 0};
  EXPECT_THROW(aggregate_runs(cfg, std::vector<RunSeries>{}), UsageError);
  EXPECT_THROW(aggregate_runs(cfg, std::vector<RunSeries>{series({}, 10)}), UsageError);
}

TEST(Csv, RowsAndFormatting) {
  SummaryRow row;
  row.backbone = "cz-L2";
  row.kind = "cz";
  row.param_count = 96;
  row.num_runs = 10;
  row.final_mean = -20.5;
  row.final_std = 0.1;
  row.final_max = -18;
  EXPECT_EQ(summary_csv_row(row), "cz-L2,cz,96,10,-20.5,0.1,-18");
  EXPECT_EQ(summary_csv_header(),
            "backbone,kind,param_num,num_runs,final_return_mean,final_return_std,final_return_max");
  const std::vector<CurvePoint> curve{{100, -21, -21, -21}, {200, -20.25, -21, -19.5}};
  EXPECT_EQ(curve_csv(curve), "step,mean,min,max\n100,-21,-21,-21\n200,-20.25,-21,-19.5\n");
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

}  // namespace
}  // namespace qpong::analysis
