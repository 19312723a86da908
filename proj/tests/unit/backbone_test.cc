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

#include "qpong/backbone.h"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qpong/error.h"

namespace qpong::backbone {
namespace {

constexpr double kPi = std::numbers::pi;

struct Row {
  const char* spec;
  std::size_t count;
};

// "Param. Num." column of the reference results table, 23 rows.
constexpr Row kTable[] = {
    {"separable:1", 48},  {"separable:2", 96},  {"separable:3", 144}, {"separable:4", 192},
    {"separable:5", 240}, {"separable:6", 288}, {"cz:1", 48},         {"cz:2", 96},
    {"cz:3", 144},        {"cz:4", 192},        {"cz:5", 240},        {"cz:6", 288},
    {"isingzz:1", 56},    {"isingzz:2", 112},   {"isingzz:3", 168},   {"isingzz:4", 224},
    {"isingzz:5", 280},   {"isingzz:6", 336},   {"mlp:4", 64},        {"mlp:8", 128},
    {"mlp:16", 256},      {"mlp:21", 336},      {"mlp:256", 4096},
};

std::vector<double> random_obs(nn::Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> obs(kObservationDim);
  for (auto& x : obs) x = u(rng);
  return obs;
}

TEST(ParameterCount, ReproducesReferenceTable) {
  ASSERT_EQ(std::size(kTable), 23u);
  for (const auto& row : kTable) {
    const auto cfg = parse_backbone_spec(row.spec);
    EXPECT_EQ(parameter_count(cfg), row.count) << row.spec;
    EXPECT_EQ(Backbone(cfg).num_params(), row.count) << row.spec;
  }
}

TEST(ParameterCount, Examples) {
  EXPECT_EQ(parameter_count({BackboneKind::kIsingZZEntangled, 6, 0}), 336u);
  EXPECT_EQ(parameter_count({BackboneKind::kClassicalMLP, 0, 256}), 4096u);
  EXPECT_EQ(parameter_count({BackboneKind::kSeparable, 4, 0}), 192u);
}

TEST(Config, SlugsAndParsing) {
  EXPECT_EQ(parse_backbone_spec("cz:2").slug(), "cz-L2");
  EXPECT_EQ(parse_backbone_spec("cz-L2"), parse_backbone_spec("cz:2"));
  EXPECT_EQ(parse_backbone_spec("mlp:256").slug(), "mlp-H256");
  EXPECT_EQ(parse_backbone_spec("isingzz:3").kind, BackboneKind::kIsingZZEntangled);
  EXPECT_THROW(parse_backbone_spec("cz:0"), ConfigError);
  EXPECT_THROW(parse_backbone_spec("toffoli:2"), ConfigError);
  EXPECT_THROW(parse_backbone_spec("cz"), ConfigError);
  EXPECT_THROW(parse_backbone_spec("mlp:-3"), ConfigError);
}

TEST(BuildCircuit, SeparableLayer) {
  const auto spec = build_pqc_circuit({BackboneKind::kSeparable, 1, 0});
  EXPECT_EQ(spec.circuit.gates.size(), 8u);
  EXPECT_EQ(spec.num_params, 48u);
  for (const auto& g : spec.circuit.gates) EXPECT_EQ(g.kind, quantum::GateKind::kU3);
}

TEST(BuildCircuit, CzThreeLayers) {
  const auto spec = build_pqc_circuit({BackboneKind::kCZEntangled, 3, 0});
  int u3 = 0, cz = 0;
  for (const auto& g : spec.circuit.gates) {
    u3 += g.kind == quantum::GateKind::kU3;
    cz += g.kind == quantum::GateKind::kCZ;
  }
  EXPECT_EQ(u3, 24);
  EXPECT_EQ(cz, 24);
  EXPECT_EQ(spec.num_params, 144u);
}

TEST(BuildCircuit, IsingZZTwoLayersRingOrder) {
  const auto spec = build_pqc_circuit({BackboneKind::kIsingZZEntangled, 2, 0});
  ASSERT_EQ(spec.circuit.gates.size(), 32u);
  EXPECT_EQ(spec.num_params, 112u);
  for (int layer = 0; layer < 2; ++layer) {
    for (int q = 0; q < 8; ++q) {
      const auto& u = spec.circuit.gates[static_cast<std::size_t>(layer * 16 + q)];
      EXPECT_EQ(u.kind, quantum::GateKind::kU3);
      EXPECT_EQ(u.first, q);
      const auto& e = spec.circuit.gates[static_cast<std::size_t>(layer * 16 + 8 + q)];
      EXPECT_EQ(e.kind, quantum::GateKind::kRZZ);
      EXPECT_EQ(e.first, q);
      EXPECT_EQ(e.second, (q + 1) % 8);
    }
  }
  // Every parameter is bound exactly once.
  std::vector<int> uses(spec.num_params, 0);
  for (const auto& b : spec.bindings) {
    ++uses[b.weight];
    if (b.input != AngleBinding::kNoInput) ++uses[b.bias];
  }
  for (int u : uses) EXPECT_EQ(u, 1);
}

TEST(BuildCircuit, AffineBindingsFollowQubitLayout) {
  const auto spec = build_pqc_circuit({BackboneKind::kCZEntangled, 1, 0});
  ASSERT_EQ(spec.bindings.size(), 24u);
  for (int q = 0; q < 8; ++q) {
    for (int k = 0; k < 3; ++k) {
      const auto& b = spec.bindings[static_cast<std::size_t>(3 * q + k)];
      EXPECT_EQ(b.input, q);
      EXPECT_EQ(b.weight, static_cast<std::size_t>(6 * q + k));
      EXPECT_EQ(b.bias, static_cast<std::size_t>(6 * q + 3 + k));
    }
  }
}

TEST(BuildCircuit, MlpHasNoCircuit) {
  EXPECT_THROW(build_pqc_circuit({BackboneKind::kClassicalMLP, 0, 8}), ConfigError);
}

TEST(Forward, ZeroParametersGiveZeroFeatures) {
  nn::Rng rng(1);
  for (auto kind : {BackboneKind::kSeparable, BackboneKind::kCZEntangled}) {
    const Backbone bb({kind, 2, 0});
    const std::vector<double> params(bb.num_params(), 0.0);
    for (double f : bb.forward(params, random_obs(rng))) EXPECT_NEAR(f, 0.0, 1e-15);
  }
}

TEST(Forward, SingleQubitClosedForm) {
  // Qubit 0 angles: theta = w0 x + b0, lambda = w1 x + b1, delta = w2 x + b2;
  // <X> = sin(theta) cos(lambda).
  const Backbone bb({BackboneKind::kSeparable, 1, 0});
  std::vector<double> params(48, 0.0);
  params[0] = kPi / 2;
  params[1] = 0.4;
  params[2] = -0.3;
  params[3] = 0.1;
  params[4] = 0.2;
  params[5] = 1.0;
  std::vector<double> obs(8, 0.0);
  obs[0] = 0.6;
  const double theta = kPi / 2 * 0.6 + 0.1;
  const double lambda = 0.4 * 0.6 + 0.2;
  const auto f = bb.forward(params, obs);
  EXPECT_NEAR(f[0], std::sin(theta) * std::cos(lambda), 1e-12);
  for (int i = 1; i < 8; ++i) EXPECT_NEAR(f[static_cast<std::size_t>(i)], 0.0, 1e-15);
}

TEST(Forward, MlpMatchesHandComputation) {
  const Backbone bb({BackboneKind::kClassicalMLP, 0, 2});
  nn::Rng rng(2);
  std::normal_distribution<double> normal;
  std::vector<double> params(bb.num_params());
  for (auto& p : params) p = normal(rng);
  const auto obs = random_obs(rng);
  const auto f = bb.forward(params, obs);
  double h[2];
  for (int j = 0; j < 2; ++j) {
    double s = 0.0;
    for (int i = 0; i < 8; ++i) s += params[static_cast<std::size_t>(j * 8 + i)] * obs[static_cast<std::size_t>(i)];
    h[j] = std::tanh(s);
  }
  for (int k = 0; k < 8; ++k) {
    const double expected = params[static_cast<std::size_t>(16 + 2 * k)] * h[0] +
                            params[static_cast<std::size_t>(16 + 2 * k + 1)] * h[1];
    EXPECT_NEAR(f[static_cast<std::size_t>(k)], expected, 1e-14);
  }
}

TEST(Forward, ShapeErrors) {
  const Backbone bb({BackboneKind::kCZEntangled, 1, 0});
  EXPECT_THROW(bb.forward(std::vector<double>(47), std::vector<double>(8)), ConfigError);
  EXPECT_THROW(bb.forward(std::vector<double>(48), std::vector<double>(7)), ConfigError);
  EXPECT_THROW(bb.backward(std::vector<double>(48), std::vector<double>(8), std::vector<double>(3)),
               ConfigError);
}

TEST(Forward, QuantumFeaturesBounded) {
  nn::Rng rng(3);
  std::normal_distribution<double> normal(0.0, 5.0);
  for (auto kind : {BackboneKind::kSeparable, BackboneKind::kCZEntangled,
                    BackboneKind::kIsingZZEntangled}) {
    const Backbone bb({kind, 2, 0});
    for (int t = 0; t < 50; ++t) {
      std::vector<double> params(bb.num_params());
      for (auto& p : params) p = normal(rng);
      for (double f : bb.forward(params, random_obs(rng))) {
        EXPECT_LE(std::abs(f), 1.0 + 1e-12);
      }
    }
  }
}

TEST(Separability, SeparableFeatureDependsOnOwnElementOnly) {
  nn::Rng rng(4);
  for (int layers : {1, 3}) {
    const Backbone bb({BackboneKind::kSeparable, layers, 0});
    const auto params = bb.init_params(rng);
    for (int trial = 0; trial < 1000; ++trial) {
      auto obs = random_obs(rng);
      const auto base = bb.forward(params, obs);
      const auto j = static_cast<std::size_t>(rng() % 8);
      obs[j] = random_obs(rng)[0];
      const auto moved = bb.forward(params, obs);
      for (std::size_t i = 0; i < 8; ++i) {
        if (i != j) {
          ASSERT_EQ(moved[i], base[i]) << "feature " << i << " element " << j;
        }
      }
    }
  }
}

TEST(Separability, EntangledFeaturesCoupleElements) {
  nn::Rng rng(5);
  for (auto kind : {BackboneKind::kCZEntangled, BackboneKind::kIsingZZEntangled}) {
    const Backbone bb({kind, 1, 0});
    const auto params = bb.init_params(rng);
    double largest = 0.0;
    const auto obs = random_obs(rng);
    const auto base = bb.forward(params, obs);
    for (std::size_t j = 0; j < 8; ++j) {
      auto moved_obs = obs;
      moved_obs[j] += 0.5;
      const auto moved = bb.forward(params, moved_obs);
      for (std::size_t i = 0; i < 8; ++i) {
        if (i != j) largest = std::max(largest, std::abs(moved[i] - base[i]));
      }
    }
    EXPECT_GT(largest, 1e-6) << to_string(kind);
  }
}

TEST(Backward, ZeroUpstreamGivesZeroGradient) {
  nn::Rng rng(6);
  for (const char* spec : {"separable:1", "cz:2", "isingzz:1", "mlp:8"}) {
    const Backbone bb(parse_backbone_spec(spec));
    const auto g = bb.backward(bb.init_params(rng), random_obs(rng), std::vector<double>(8, 0.0));
    for (double x : g.params) EXPECT_EQ(x, 0.0);
    for (double x : g.obs) EXPECT_EQ(x, 0.0);
  }
}

TEST(Backward, SeparableCrossQubitGradientIsZero) {
  nn::Rng rng(7);
  const Backbone bb({BackboneKind::kSeparable, 2, 0});
  const auto params = bb.init_params(rng);
  const auto obs = random_obs(rng);
  for (std::size_t i = 0; i < 8; ++i) {
    std::vector<double> up(8, 0.0);
    up[i] = 1.0;
    const auto g = bb.backward(params, obs, up);
    for (std::size_t k = 0; k < g.params.size(); ++k) {
      const std::size_t qubit = (k % 48) / 6;
      if (qubit != i) {
        EXPECT_EQ(g.params[k], 0.0);
      }
    }
  }
}

TEST(Backward, MatchesFiniteDifferencesAllKinds) {
  nn::Rng rng(8);
  const double h = 1e-5;
  for (const char* spec : {"separable:1", "separable:2", "cz:1", "cz:2", "isingzz:1", "isingzz:2",
                           "mlp:4", "mlp:8"}) {
    const Backbone bb(parse_backbone_spec(spec));
    auto params = bb.init_params(rng);
    auto obs = random_obs(rng);
    const auto up = random_obs(rng);
    const auto g = bb.backward(params, obs, up);
    const auto f = bb.forward(params, obs);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(g.features[i], f[i], 1e-13);
    auto loss = [&] {
      const auto y = bb.forward(params, obs);
      double s = 0.0;
      for (std::size_t i = 0; i < 8; ++i) s += y[i] * up[i];
      return s;
    };
    auto agree = [](double an, double fd) {
      const double d = std::abs(an - fd);
      return d <= 1e-7 || d <= 1e-5 * std::abs(fd);
    };
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double s = params[k];
      params[k] = s + h;
      const double p = loss();
      params[k] = s - h;
      const double m = loss();
      params[k] = s;
      EXPECT_TRUE(agree(g.params[k], (p - m) / (2 * h))) << spec << " param " << k;
    }
    for (std::size_t j = 0; j < 8; ++j) {
      const double s = obs[j];
      obs[j] = s + h;
      const double p = loss();
      obs[j] = s - h;
      const double m = loss();
      obs[j] = s;
      EXPECT_TRUE(agree(g.obs[j], (p - m) / (2 * h))) << spec << " obs " << j;
    }
  }
}

TEST(Init, DistributionsAndDeterminism) {
  const Backbone bb({BackboneKind::kIsingZZEntangled, 6, 0});
  nn::Rng a(9), b(9);
  const auto pa = bb.init_params(a);
  EXPECT_EQ(pa, bb.init_params(b));
  const auto& spec = *bb.circuit_spec();
  for (const auto& binding : spec.bindings) {
    if (binding.input == AngleBinding::kNoInput) {
      EXPECT_LE(std::abs(pa[binding.weight]), kPi);
    } else {
      EXPECT_LE(std::abs(pa[binding.bias]), kPi);
    }
  }
}

}  // namespace
}  // namespace qpong::backbone
