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

// Exact statevector simulation for circuits over the {U3, CZ, RZZ} gate set.
//
// Qubit i corresponds to bit i of the basis-state index. Circuits always
// start from |0...0>. Angles are plain resolved scalars laid out in gate
// order: three per U3 gate (theta, lambda, delta), one per RZZ gate, none
// for CZ.

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace qpong::quantum {

using Complex = std::complex<double>;

// Row-major 2x2 matrix {m00, m01, m10, m11}.
using Matrix2 = std::array<Complex, 4>;

// Diagonal of a two-qubit gate, indexed by (bit_a + 2 * bit_b).
using Diagonal4 = std::array<Complex, 4>;

enum class GateKind { kU3, kCZ, kRZZ };

struct Gate {
  GateKind kind = GateKind::kU3;
  int first = 0;
  int second = -1;  // unused for U3

  static Gate U3(int qubit) { return {GateKind::kU3, qubit, -1}; }
  static Gate CZ(int a, int b) { return {GateKind::kCZ, a, b}; }
  static Gate RZZ(int a, int b) { return {GateKind::kRZZ, a, b}; }

  int num_angles() const;
  bool is_two_qubit() const { return kind != GateKind::kU3; }

  friend bool operator==(const Gate&, const Gate&) = default;
};

struct Circuit {
  int num_qubits = 0;
  std::vector<Gate> gates;

  std::size_t num_angles() const;
  // Throws ConfigError if any gate target is out of range or a pair repeats
  // a qubit.
  void validate() const;
};

class StateVector {
 public:
  // |0...0> on `num_qubits` qubits.
  explicit StateVector(int num_qubits);

  static StateVector FromAmplitudes(int num_qubits, std::vector<Complex> amplitudes);

  int num_qubits() const { return num_qubits_; }
  std::size_t size() const { return amplitudes_.size(); }
  std::span<const Complex> amplitudes() const { return amplitudes_; }
  std::span<Complex> amplitudes() { return amplitudes_; }
  const Complex& operator[](std::size_t i) const { return amplitudes_[i]; }

  double norm_squared() const;
  Complex inner(const StateVector& other) const;  // <this|other>

 private:
  int num_qubits_;
  std::vector<Complex> amplitudes_;
};

Matrix2 u3_matrix(double theta, double lambda, double delta);

// d U3 / d angle, where `angle` is 0 (theta), 1 (lambda) or 2 (delta).
Matrix2 u3_derivative(double theta, double lambda, double delta, int angle);

Diagonal4 rzz_matrix(double theta);
Diagonal4 rzz_derivative(double theta);
Diagonal4 cz_diagonal();

Matrix2 adjoint(const Matrix2& m);

// In-place kernels. No bounds checks; use apply_gate for validated access.
void apply_matrix2(std::span<Complex> amps, int qubit, const Matrix2& m);
void apply_diagonal4(std::span<Complex> amps, int a, int b, const Diagonal4& d);
void apply_pauli_x(std::span<Complex> amps, int qubit);

// Applies `gate` with its resolved `angles` (size gate.num_angles()).
void apply_gate(StateVector& state, const Gate& gate, std::span<const double> angles);
void apply_gate_inverse(StateVector& state, const Gate& gate, std::span<const double> angles);

StateVector run_circuit(const Circuit& circuit, std::span<const double> angles);

// <psi|X_i|psi> for every qubit i.
std::vector<double> pauli_x_expectations(const StateVector& state);

// Jacobian d<X_i>/d angle_k, shape num_qubits x num_angles, by one forward
// pass and a reverse sweep carrying all num_qubits observables.
Eigen::MatrixXd circuit_gradient(const Circuit& circuit, std::span<const double> angles);

struct ExpectationVjp {
  std::vector<double> expectations;  // <X_i>
  std::vector<double> angle_grad;    // sum_i upstream_i d<X_i>/d angle_k
};

// Vector-Jacobian product through the X readout using the single observable
// sum_i upstream_i X_i.
ExpectationVjp expectation_vjp(const Circuit& circuit, std::span<const double> angles,
                               std::span<const double> upstream);

}  // namespace qpong::quantum
