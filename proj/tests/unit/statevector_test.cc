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

#include "qpong/statevector.h"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "qpong/error.h"

namespace qpong::quantum {
namespace {

constexpr double kPi = std::numbers::pi;
const Complex kI{0.0, 1.0};

Eigen::Matrix2cd to_eigen(const Matrix2& m) {
  Eigen::Matrix2cd e;
  e << m[0], m[1], m[2], m[3];
  return e;
}

// Closed form of the U3 matrix written out independently of the library.
Eigen::Matrix2cd u3_oracle(double t, double l, double d) {
  Eigen::Matrix2cd e;
  e << std::cos(t / 2), -std::exp(kI * d) * std::sin(t / 2), std::exp(kI * l) * std::sin(t / 2),
      std::exp(kI * (l + d)) * std::cos(t / 2);
  return e;
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

// Embeds a single-qubit operator on `qubit` of an n-qubit register. With the
// little-endian convention the highest qubit is the leftmost factor.
Eigen::MatrixXcd embed(const Eigen::Matrix2cd& op, int qubit, int n) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
  for (int q = n - 1; q >= 0; --q) {
    out = kron(out, q == qubit ? Eigen::MatrixXcd(op) : Eigen::MatrixXcd::Identity(2, 2));
  }
  return out;
}

Eigen::Matrix2cd pauli_z() {
  Eigen::Matrix2cd z;
  z << 1, 0, 0, -1;
  return z;
}

Eigen::Matrix2cd pauli_x() {
  Eigen::Matrix2cd x;
  x << 0, 1, 1, 0;
  return x;
}

// exp(-i theta/2 Z_a Z_b) and CZ as dense operators built from Pauli algebra.
Eigen::MatrixXcd dense_rzz(int a, int b, double theta, int n) {
  const Eigen::MatrixXcd zz = embed(pauli_z(), a, n) * embed(pauli_z(), b, n);
  const Eigen::Index dim = zz.rows();
  return std::cos(theta / 2) * Eigen::MatrixXcd::Identity(dim, dim) - kI * std::sin(theta / 2) * zz;
}

Eigen::MatrixXcd dense_cz(int a, int b, int n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(dim, dim);
  const Eigen::MatrixXcd za = embed(pauli_z(), a, n);
  const Eigen::MatrixXcd zb = embed(pauli_z(), b, n);
  return 0.5 * (id + za + zb - za * zb);
}

Circuit random_circuit(std::mt19937_64& rng, int n, int gates) {
  Circuit c{n, {}};
  for (int g = 0; g < gates; ++g) {
    const int q = static_cast<int>(rng() % static_cast<unsigned>(n));
    const int kind = n > 1 ? static_cast<int>(rng() % 3) : 0;
    if (kind == 0) {
      c.gates.push_back(Gate::U3(q));
    } else {
      int r = static_cast<int>(rng() % static_cast<unsigned>(n - 1));
      if (r >= q) ++r;
      c.gates.push_back(kind == 1 ? Gate::CZ(q, r) : Gate::RZZ(q, r));
    }
  }
  return c;
}

std::vector<double> random_angles(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-kPi, kPi);
  std::vector<double> a(n);
  for (auto& x : a) x = u(rng);
  return a;
}

Eigen::VectorXcd dense_oracle(const Circuit& c, const std::vector<double>& angles) {
  const Eigen::Index dim = Eigen::Index{1} << c.num_qubits;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
  psi(0) = 1.0;
  std::size_t k = 0;
  for (const auto& g : c.gates) {
    switch (g.kind) {
      case GateKind::kU3:
        psi = embed(u3_oracle(angles[k], angles[k + 1], angles[k + 2]), g.first, c.num_qubits) * psi;
        k += 3;
        break;
      case GateKind::kCZ:
        psi = dense_cz(g.first, g.second, c.num_qubits) * psi;
        break;
      case GateKind::kRZZ:
        psi = dense_rzz(g.first, g.second, angles[k], c.num_qubits) * psi;
        k += 1;
        break;
    }
  }
  return psi;
}

TEST(U3Matrix, ZeroAnglesGiveIdentity) {
  EXPECT_LT((to_eigen(u3_matrix(0, 0, 0)) - Eigen::Matrix2cd::Identity()).norm(), 1e-15);
}

TEST(U3Matrix, PauliXFixture) {
  EXPECT_LT((to_eigen(u3_matrix(kPi, 0, kPi)) - pauli_x()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(U3Matrix, HadamardFixture) {
  Eigen::Matrix2cd h;
  h << 1, 1, 1, -1;
  h /= std::sqrt(2.0);
  EXPECT_LT((to_eigen(u3_matrix(kPi / 2, 0, kPi)) - h).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(U3Matrix, MatchesClosedFormAndIsUnitary) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 100; ++i) {
    const double t = u(rng), l = u(rng), d = u(rng);
    const auto m = to_eigen(u3_matrix(t, l, d));
    EXPECT_LT((m - u3_oracle(t, l, d)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((m.adjoint() * m - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(U3Matrix, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    double a[3] = {u(rng), u(rng), u(rng)};
    for (int k = 0; k < 3; ++k) {
      double p[3] = {a[0], a[1], a[2]};
      double m[3] = {a[0], a[1], a[2]};
      p[k] += h;
      m[k] -= h;
      const Eigen::Matrix2cd fd =
          (to_eigen(u3_matrix(p[0], p[1], p[2])) - to_eigen(u3_matrix(m[0], m[1], m[2]))) / (2 * h);
      EXPECT_LT((to_eigen(u3_derivative(a[0], a[1], a[2], k)) - fd).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(RzzMatrix, Fixtures) {
  const auto zero = rzz_matrix(0.0);
  for (const auto& v : zero) EXPECT_LT(std::abs(v - 1.0), 1e-15);
  const auto pi = rzz_matrix(kPi);
  EXPECT_LT(std::abs(pi[0] + kI), 1e-12);
  EXPECT_LT(std::abs(pi[1] - kI), 1e-12);
  EXPECT_LT(std::abs(pi[2] - kI), 1e-12);
  EXPECT_LT(std::abs(pi[3] + kI), 1e-12);
  for (const auto& v : rzz_matrix(2 * kPi)) EXPECT_LT(std::abs(v + 1.0), 1e-12);
}

TEST(RzzMatrix, UnitaryAndDerivative) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 100; ++i) {
    const double t = u(rng);
    const auto d = rzz_matrix(t);
    const auto dp = rzz_matrix(t + 1e-6);
    const auto dm = rzz_matrix(t - 1e-6);
    const auto dd = rzz_derivative(t);
    for (int k = 0; k < 4; ++k) {
      EXPECT_NEAR(std::norm(d[k]), 1.0, 1e-12);
      EXPECT_LT(std::abs(dd[k] - (dp[k] - dm[k]) / 2e-6), 1e-8);
    }
  }
}

TEST(ApplyGate, CzLeavesGroundStateUnchanged) {
  StateVector s(8);
  apply_gate(s, Gate::CZ(0, 1), {});
  EXPECT_EQ(s[0], Complex(1.0, 0.0));
  EXPECT_DOUBLE_EQ(s.norm_squared(), 1.0);
}

TEST(ApplyGate, XFlipsSingleQubit) {
  StateVector s(1);
  const std::vector<double> a{kPi, 0, kPi};
  apply_gate(s, Gate::U3(0), a);
  EXPECT_LT(std::abs(s[0]), 1e-12);
  EXPECT_LT(std::abs(s[1] - 1.0), 1e-12);
}

TEST(ApplyGate, RejectsBadTargets) {
  StateVector s(3);
  const std::vector<double> a{0.1, 0.2, 0.3};
  EXPECT_THROW(apply_gate(s, Gate::U3(3), a), ConfigError);
  EXPECT_THROW(apply_gate(s, Gate::U3(-1), a), ConfigError);
  EXPECT_THROW(apply_gate(s, Gate::CZ(1, 1), {}), ConfigError);
  EXPECT_THROW(apply_gate(s, Gate::RZZ(0, 5), std::vector<double>{0.1}), ConfigError);
  EXPECT_THROW(apply_gate(s, Gate::U3(0), std::vector<double>{0.1}), ConfigError);
}

TEST(ApplyGate, SymmetricTwoQubitGates) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const Circuit c = random_circuit(rng, 5, 15);
    const auto base = run_circuit(c, random_angles(rng, c.num_angles()));
    const std::vector<double> theta{random_angles(rng, 1)[0]};
    for (auto kind : {GateKind::kCZ, GateKind::kRZZ}) {
      StateVector ab = base, ba = base;
      const std::span<const double> a =
          kind == GateKind::kRZZ ? std::span<const double>(theta) : std::span<const double>();
      apply_gate(ab, {kind, 0, 4}, a);
      apply_gate(ba, {kind, 4, 0}, a);
      for (std::size_t k = 0; k < ab.size(); ++k) EXPECT_EQ(ab[k], ba[k]);
    }
  }
}

TEST(ApplyGate, EntanglerOrderInsideLayerIsIrrelevant) {
  std::mt19937_64 rng(5);
  const Circuit prep = random_circuit(rng, 8, 20);
  const auto base = run_circuit(prep, random_angles(rng, prep.num_angles()));
  const auto thetas = random_angles(rng, 8);
  StateVector forward = base, backward = base;
  for (int q = 0; q < 8; ++q) {
    apply_gate(forward, Gate::RZZ(q, (q + 1) % 8), std::span<const double>(&thetas[q], 1));
  }
  for (int q = 7; q >= 0; --q) {
    apply_gate(backward, Gate::RZZ(q, (q + 1) % 8), std::span<const double>(&thetas[q], 1));
  }
  for (std::size_t k = 0; k < base.size(); ++k) EXPECT_LT(std::abs(forward[k] - backward[k]), 1e-14);
}

TEST(RunCircuit, EmptyCircuitIsGroundState) {
  const auto s = run_circuit(Circuit{8, {}}, {});
  ASSERT_EQ(s.size(), 256u);
  EXPECT_EQ(s[0], Complex(1.0, 0.0));
  for (std::size_t k = 1; k < s.size(); ++k) EXPECT_EQ(s[k], Complex(0.0, 0.0));
}

TEST(RunCircuit, XOnQubitZeroSetsLowestBit) {
  const std::vector<double> a{kPi, 0, kPi};
  const auto s = run_circuit(Circuit{2, {Gate::U3(0)}}, a);
  EXPECT_LT(std::abs(s[1] - 1.0), 1e-12);
  EXPECT_LT(std::abs(s[0]) + std::abs(s[2]) + std::abs(s[3]), 1e-12);
}

TEST(RunCircuit, CircuitThenInverseReturnsToGroundState) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 50; ++i) {
    const Circuit c = random_circuit(rng, 6, 30);
    const auto angles = random_angles(rng, c.num_angles());
    StateVector s = run_circuit(c, angles);
    std::size_t end = angles.size();
    for (auto g = c.gates.rbegin(); g != c.gates.rend(); ++g) {
      const auto k = static_cast<std::size_t>(g->num_angles());
      end -= k;
      apply_gate_inverse(s, *g, std::span<const double>(angles).subspan(end, k));
    }
    EXPECT_LT(std::abs(s[0] - 1.0), 1e-10);
  }
}

TEST(RunCircuit, MatchesDenseKroneckerOracle) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const Circuit c = random_circuit(rng, n, 12);
    const auto angles = random_angles(rng, c.num_angles());
    const auto s = run_circuit(c, angles);
    const auto oracle = dense_oracle(c, angles);
    for (std::size_t k = 0; k < s.size(); ++k) {
      EXPECT_LT(std::abs(s[k] - oracle(static_cast<Eigen::Index>(k))), 1e-10);
    }
  }
}

TEST(RunCircuit, NormPreservedOverRandomCircuits) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 1000; ++i) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const Circuit c = random_circuit(rng, n, 25);
    EXPECT_NEAR(run_circuit(c, random_angles(rng, c.num_angles())).norm_squared(), 1.0, 1e-12);
  }
}

TEST(PauliX, GroundStateIsZero) {
  for (double v : pauli_x_expectations(StateVector(8))) EXPECT_EQ(v, 0.0);
}

TEST(PauliX, PlusStateOnQubitZero) {
  const std::vector<double> h{kPi / 2, 0, kPi};
  const auto x = pauli_x_expectations(run_circuit(Circuit{3, {Gate::U3(0)}}, h));
  EXPECT_NEAR(x[0], 1.0, 1e-12);
  EXPECT_NEAR(x[1], 0.0, 1e-12);
  EXPECT_NEAR(x[2], 0.0, 1e-12);
}

TEST(PauliX, MatchesDenseOperatorExpectation) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    const int n = 2 + static_cast<int>(rng() % 3);
    const Circuit c = random_circuit(rng, n, 10);
    const auto angles = random_angles(rng, c.num_angles());
    const auto x = pauli_x_expectations(run_circuit(c, angles));
    const auto psi = dense_oracle(c, angles);
    for (int q = 0; q < n; ++q) {
      const Complex e = psi.dot(embed(pauli_x(), q, n) * psi);
      EXPECT_NEAR(x[static_cast<std::size_t>(q)], e.real(), 1e-12);
      EXPECT_LE(std::abs(x[static_cast<std::size_t>(q)]), 1.0 + 1e-12);
    }
  }
}

TEST(PauliX, HalfRotationClosedForm) {
  // U3(theta, lambda, 0)|0> gives <X> = sin(theta) cos(lambda).
  for (double t : {0.3, kPi / 2, 2.0}) {
    for (double l : {0.0, 0.7}) {
      const std::vector<double> a{t, l, 0.0};
      const auto x = pauli_x_expectations(run_circuit(Circuit{2, {Gate::U3(0)}}, a));
      EXPECT_NEAR(x[0], std::sin(t) * std::cos(l), 1e-12);
    }
  }
}

TEST(CircuitGradient, SlopeOneAtZero) {
  const std::vector<double> a{0, 0, 0};
  const auto g = circuit_gradient(Circuit{1, {Gate::U3(0)}}, a);
  EXPECT_NEAR(g(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(g(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(g(0, 2), 0.0, 1e-12);
}

TEST(CircuitGradient, DisjointLightConeIsZero) {
  std::mt19937_64 rng(10);
  const Circuit c{4, {Gate::U3(0), Gate::U3(1), Gate::U3(2), Gate::U3(3)}};
  const auto g = circuit_gradient(c, random_angles(rng, c.num_angles()));
  for (int q = 0; q < 4; ++q) {
    for (int k = 0; k < 12; ++k) {
      if (k / 3 != q) {
        EXPECT_NEAR(g(q, k), 0.0, 1e-14);
      }
    }
  }
}

TEST(CircuitGradient, MatchesCentralFiniteDifferences) {
  std::mt19937_64 rng(11);
  const double h = 1e-5;
  for (int i = 0; i < 50; ++i) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const Circuit c = random_circuit(rng, n, 10);
    auto angles = random_angles(rng, c.num_angles());
    const auto g = circuit_gradient(c, angles);
    ASSERT_EQ(g.rows(), n);
    ASSERT_EQ(g.cols(), static_cast<Eigen::Index>(angles.size()));
    for (std::size_t k = 0; k < angles.size(); ++k) {
      const double saved = angles[k];
      angles[k] = saved + h;
      const auto p = pauli_x_expectations(run_circuit(c, angles));
      angles[k] = saved - h;
      const auto m = pauli_x_expectations(run_circuit(c, angles));
      angles[k] = saved;
      for (int q = 0; q < n; ++q) {
        const double fd = (p[q] - m[q]) / (2 * h);
        const double an = g(q, static_cast<Eigen::Index>(k));
        const double diff = std::abs(an - fd);
        EXPECT_TRUE(diff <= 1e-7 || diff <= 1e-5 * std::abs(fd)) << an << " vs " << fd;
      }
    }
  }
}

TEST(ExpectationVjp, ContractsJacobian) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 20; ++i) {
    const Circuit c = random_circuit(rng, 4, 16);
    const auto angles = random_angles(rng, c.num_angles());
    const auto up = random_angles(rng, 4);
    const auto vjp = expectation_vjp(c, angles, up);
    const auto g = circuit_gradient(c, angles);
    const auto x = pauli_x_expectations(run_circuit(c, angles));
    for (int q = 0; q < 4; ++q) EXPECT_NEAR(vjp.expectations[q], x[q], 1e-14);
    for (std::size_t k = 0; k < angles.size(); ++k) {
      double expected = 0.0;
      for (int q = 0; q < 4; ++q) expected += up[q] * g(q, static_cast<Eigen::Index>(k));
      EXPECT_NEAR(vjp.angle_grad[k], expected, 1e-12);
    }
  }
}

TEST(StateVector, RejectsInvalidSizes) {
  EXPECT_THROW(StateVector(0), ConfigError);
  EXPECT_THROW(StateVector::FromAmplitudes(2, std::vector<Complex>(3)), ConfigError);
}

}  // namespace
}  // namespace qpong::quantum
