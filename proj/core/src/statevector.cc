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
#include <string>

#include "qpong/error.h"

namespace qpong::quantum {
namespace {

constexpr Complex kI{0.0, 1.0};

std::vector<std::size_t> angle_offsets(const Circuit& circuit) {
  std::vector<std::size_t> offsets;
  offsets.reserve(circuit.gates.size());
  std::size_t next = 0;
  for (const Gate& g : circuit.gates) {
    offsets.push_back(next);
    next += static_cast<std::size_t>(g.num_angles());
  }
  return offsets;
}

void check_angles(const Circuit& circuit, std::span<const double> angles) {
  if (angles.size() != circuit.num_angles()) {
    throw ConfigError("circuit expects " + std::to_string(circuit.num_angles()) +
                      " angles, got " + std::to_string(angles.size()));
  }
}

void check_gate(const Gate& gate, int num_qubits) {
  auto in_range = [&](int q) { return q >= 0 && q < num_qubits; };
  if (!in_range(gate.first)) {
    throw ConfigError("gate qubit " + std::to_string(gate.first) + " out of range for " +
                      std::to_string(num_qubits) + " qubits");
  }
  if (gate.is_two_qubit()) {
    if (!in_range(gate.second)) {
      throw ConfigError("gate qubit " + std::to_string(gate.second) + " out of range for " +
                        std::to_string(num_qubits) + " qubits");
    }
    if (gate.first == gate.second) {
      throw ConfigError("two-qubit gate targets must be distinct");
    }
  }
}

Diagonal4 conj(const Diagonal4& d) {
  return {std::conj(d[0]), std::conj(d[1]), std::conj(d[2]), std::conj(d[3])};
}

// Pair correlations S_ab = sum over index pairs of conj(bra_a) * ket_b.
std::array<Complex, 4> pair_correlations(std::span<const Complex> bra, std::span<const Complex> ket,
                                         int qubit) {
  const std::size_t stride = std::size_t{1} << qubit;
  std::array<Complex, 4> s{};
  for (std::size_t base = 0; base < bra.size(); base += 2 * stride) {
    for (std::size_t j = 0; j < stride; ++j) {
      const std::size_t i0 = base + j;
      const std::size_t i1 = i0 + stride;
      const Complex b0 = std::conj(bra[i0]);
      const Complex b1 = std::conj(bra[i1]);
      s[0] += b0 * ket[i0];
      s[1] += b0 * ket[i1];
      s[2] += b1 * ket[i0];
      s[3] += b1 * ket[i1];
    }
  }
  return s;
}

Complex diagonal_braket(std::span<const Complex> bra, std::span<const Complex> ket, int a, int b,
                        const Diagonal4& d) {
  Complex acc{};
  for (std::size_t k = 0; k < bra.size(); ++k) {
    const std::size_t idx = ((k >> a) & 1U) | (((k >> b) & 1U) << 1);
    acc += std::conj(bra[k]) * d[idx] * ket[k];
  }
  return acc;
}

// Reverse sweep: `phi` is the final state, `lambdas` the observables applied
// to it. Returns one gradient row per lambda.
Eigen::MatrixXd adjoint_sweep(const Circuit& circuit, std::span<const double> angles,
                              StateVector phi, std::vector<StateVector>& lambdas) {
  const auto offsets = angle_offsets(circuit);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lambdas.size()),
                                               static_cast<Eigen::Index>(angles.size()));
  for (std::size_t g = circuit.gates.size(); g-- > 0;) {
    const Gate& gate = circuit.gates[g];
    const auto gate_angles = angles.subspan(offsets[g], static_cast<std::size_t>(gate.num_angles()));
    apply_gate_inverse(phi, gate, gate_angles);
    const auto col = static_cast<Eigen::Index>(offsets[g]);
    if (gate.kind == GateKind::kU3) {
      const std::array<Matrix2, 3> derivs = {
          u3_derivative(gate_angles[0], gate_angles[1], gate_angles[2], 0),
          u3_derivative(gate_angles[0], gate_angles[1], gate_angles[2], 1),
          u3_derivative(gate_angles[0], gate_angles[1], gate_angles[2], 2)};
      for (std::size_t l = 0; l < lambdas.size(); ++l) {
        const auto s = pair_correlations(lambdas[l].amplitudes(), phi.amplitudes(), gate.first);
        for (int a = 0; a < 3; ++a) {
          const Matrix2& d = derivs[static_cast<std::size_t>(a)];
          const Complex v = d[0] * s[0] + d[1] * s[1] + d[2] * s[2] + d[3] * s[3];
          grad(static_cast<Eigen::Index>(l), col + a) = 2.0 * v.real();
        }
      }
    } else if (gate.kind == GateKind::kRZZ) {
      const Diagonal4 d = rzz_derivative(gate_angles[0]);
      for (std::size_t l = 0; l < lambdas.size(); ++l) {
        const Complex v =
            diagonal_braket(lambdas[l].amplitudes(), phi.amplitudes(), gate.first, gate.second, d);
        grad(static_cast<Eigen::Index>(l), col) = 2.0 * v.real();
      }
    }
    for (auto& lambda : lambdas) apply_gate_inverse(lambda, gate, gate_angles);
  }
  return grad;
}

}  // namespace

int Gate::num_angles() const {
  switch (kind) {
    case GateKind::kU3:
      return 3;
    case GateKind::kRZZ:
      return 1;
    case GateKind::kCZ:
      return 0;
  }
  return 0;
}

std::size_t Circuit::num_angles() const {
  std::size_t n = 0;
  for (const Gate& g : gates) n += static_cast<std::size_t>(g.num_angles());
  return n;
}

void Circuit::validate() const {
  if (num_qubits <= 0) throw ConfigError("circuit needs at least one qubit");
  for (const Gate& g : gates) check_gate(g, num_qubits);
}

StateVector::StateVector(int num_qubits) : num_qubits_(num_qubits) {
  if (num_qubits <= 0 || num_qubits > 24) {
    throw ConfigError("unsupported qubit count " + std::to_string(num_qubits));
  }
  amplitudes_.assign(std::size_t{1} << num_qubits, Complex{});
  amplitudes_[0] = 1.0;
}

StateVector StateVector::FromAmplitudes(int num_qubits, std::vector<Complex> amplitudes) {
  StateVector s(num_qubits);
  if (amplitudes.size() != s.size()) {
    throw ConfigError("amplitude count does not match 2^num_qubits");
  }
  s.amplitudes_ = std::move(amplitudes);
  return s;
}

double StateVector::norm_squared() const {
  double acc = 0.0;
  for (const Complex& a : amplitudes_) acc += std::norm(a);
  return acc;
}

Complex StateVector::inner(const StateVector& other) const {
  Complex acc{};
  for (std::size_t i = 0; i < amplitudes_.size(); ++i) {
    acc += std::conj(amplitudes_[i]) * other.amplitudes_[i];
  }
  return acc;
}

Matrix2 u3_matrix(double theta, double lambda, double delta) {
  const double c = std::cos(theta / 2);
  const double s = std::sin(theta / 2);
  return {Complex{c, 0.0}, -std::exp(kI * delta) * s, std::exp(kI * lambda) * s,
          std::exp(kI * (lambda + delta)) * c};
}

Matrix2 u3_derivative(double theta, double lambda, double delta, int angle) {
  const double c = std::cos(theta / 2);
  const double s = std::sin(theta / 2);
  const Complex el = std::exp(kI * lambda);
  const Complex ed = std::exp(kI * delta);
  const Complex eld = std::exp(kI * (lambda + delta));
  switch (angle) {
    case 0:
      return {Complex{-s / 2, 0.0}, -ed * (c / 2), el * (c / 2), -eld * (s / 2)};
    case 1:
      return {Complex{}, Complex{}, kI * el * s, kI * eld * c};
    case 2:
      return {Complex{}, -kI * ed * s, Complex{}, kI * eld * c};
    default:
      throw ConfigError("U3 has three angles; index " + std::to_string(angle) + " is invalid");
  }
}

Diagonal4 rzz_matrix(double theta) {
  const Complex minus = std::exp(-kI * (theta / 2));
  const Complex plus = std::exp(kI * (theta / 2));
  return {minus, plus, plus, minus};
}

Diagonal4 rzz_derivative(double theta) {
  const Diagonal4 d = rzz_matrix(theta);
  return {-kI * 0.5 * d[0], kI * 0.5 * d[1], kI * 0.5 * d[2], -kI * 0.5 * d[3]};
}

Diagonal4 cz_diagonal() { return {1.0, 1.0, 1.0, -1.0}; }

Matrix2 adjoint(const Matrix2& m) {
  return {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])};
}

void apply_matrix2(std::span<Complex> amps, int qubit, const Matrix2& m) {
  const std::size_t stride = std::size_t{1} << qubit;
  for (std::size_t base = 0; base < amps.size(); base += 2 * stride) {
    for (std::size_t j = 0; j < stride; ++j) {
      const std::size_t i0 = base + j;
      const std::size_t i1 = i0 + stride;
      const Complex a0 = amps[i0];
      const Complex a1 = amps[i1];
      amps[i0] = m[0] * a0 + m[1] * a1;
      amps[i1] = m[2] * a0 + m[3] * a1;
    }
  }
}

void apply_diagonal4(std::span<Complex> amps, int a, int b, const Diagonal4& d) {
  for (std::size_t k = 0; k < amps.size(); ++k) {
    const std::size_t idx = ((k >> a) & 1U) | (((k >> b) & 1U) << 1);
    amps[k] *= d[idx];
  }
}

void apply_pauli_x(std::span<Complex> amps, int qubit) {
  const std::size_t stride = std::size_t{1} << qubit;
  for (std::size_t base = 0; base < amps.size(); base += 2 * stride) {
    for (std::size_t j = 0; j < stride; ++j) {
      std::swap(amps[base + j], amps[base + j + stride]);
    }
  }
}

void apply_gate(StateVector& state, const Gate& gate, std::span<const double> angles) {
  check_gate(gate, state.num_qubits());
  if (angles.size() != static_cast<std::size_t>(gate.num_angles())) {
    throw ConfigError("gate expects " + std::to_string(gate.num_angles()) + " angles");
  }
  switch (gate.kind) {
    case GateKind::kU3:
      apply_matrix2(state.amplitudes(), gate.first, u3_matrix(angles[0], angles[1], angles[2]));
      break;
    case GateKind::kCZ:
      apply_diagonal4(state.amplitudes(), gate.first, gate.second, cz_diagonal());
      break;
    case GateKind::kRZZ:
      apply_diagonal4(state.amplitudes(), gate.first, gate.second, rzz_matrix(angles[0]));
      break;
  }
}

void apply_gate_inverse(StateVector& state, const Gate& gate, std::span<const double> angles) {
  check_gate(gate, state.num_qubits());
  switch (gate.kind) {
    case GateKind::kU3:
      apply_matrix2(state.amplitudes(), gate.first,
                    adjoint(u3_matrix(angles[0], angles[1], angles[2])));
      break;
    case GateKind::kCZ:
      apply_diagonal4(state.amplitudes(), gate.first, gate.second, cz_diagonal());
      break;
    case GateKind::kRZZ:
      apply_diagonal4(state.amplitudes(), gate.first, gate.second, conj(rzz_matrix(angles[0])));
      break;
  }
}

StateVector run_circuit(const Circuit& circuit, std::span<const double> angles) {
  circuit.validate();
  check_angles(circuit, angles);
  StateVector state(circuit.num_qubits);
  std::size_t offset = 0;
  for (const Gate& g : circuit.gates) {
    const auto n = static_cast<std::size_t>(g.num_angles());
    apply_gate(state, g, angles.subspan(offset, n));
    offset += n;
  }
  return state;
}

std::vector<double> pauli_x_expectations(const StateVector& state) {
  const auto amps = state.amplitudes();
  std::vector<double> values(static_cast<std::size_t>(state.num_qubits()), 0.0);
  for (int q = 0; q < state.num_qubits(); ++q) {
    const std::size_t stride = std::size_t{1} << q;
    double acc = 0.0;
    for (std::size_t base = 0; base < amps.size(); base += 2 * stride) {
      for (std::size_t j = 0; j < stride; ++j) {
        acc += (std::conj(amps[base + j]) * amps[base + j + stride]).real();
      }
    }
    values[static_cast<std::size_t>(q)] = 2.0 * acc;
  }
  return values;
}

Eigen::MatrixXd circuit_gradient(const Circuit& circuit, std::span<const double> angles) {
  StateVector final_state = run_circuit(circuit, angles);
  std::vector<StateVector> lambdas;
  lambdas.reserve(static_cast<std::size_t>(circuit.num_qubits));
  for (int q = 0; q < circuit.num_qubits; ++q) {
    StateVector l = final_state;
    apply_pauli_x(l.amplitudes(), q);
    lambdas.push_back(std::move(l));
  }
  return adjoint_sweep(circuit, angles, std::move(final_state), lambdas);
}

ExpectationVjp expectation_vjp(const Circuit& circuit, std::span<const double> angles,
                               std::span<const double> upstream) {
  if (upstream.size() != static_cast<std::size_t>(circuit.num_qubits)) {
    throw ConfigError("upstream gradient must have one entry per qubit");
  }
  StateVector final_state = run_circuit(circuit, angles);
  ExpectationVjp out;
  out.expectations = pauli_x_expectations(final_state);

  StateVector lambda = StateVector::FromAmplitudes(
      circuit.num_qubits, std::vector<Complex>(final_state.size(), Complex{}));
  for (int q = 0; q < circuit.num_qubits; ++q) {
    const double u = upstream[static_cast<std::size_t>(q)];
    if (u == 0.0) continue;
    StateVector xq = final_state;
    apply_pauli_x(xq.amplitudes(), q);
    auto dst = lambda.amplitudes();
    const auto src = xq.amplitudes();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += u * src[k];
  }
  std::vector<StateVector> lambdas;
  lambdas.push_back(std::move(lambda));
  const Eigen::MatrixXd row = adjoint_sweep(circuit, angles, std::move(final_state), lambdas);
  out.angle_grad.assign(row.data(), row.data() + row.size());
  return out;
}

}  // namespace qpong::quantum
