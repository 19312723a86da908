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

// Feature extractors mapping an 8-element observation to an 8-element
// feature vector: three data-reuploading circuits (separable, CZ ring,
// trainable RZZ ring) and a bias-free one-hidden-layer tanh MLP.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qpong/nn.h"
#include "qpong/statevector.h"

namespace qpong::backbone {

inline constexpr int kNumQubits = 8;
inline constexpr int kFeatureDim = 8;
inline constexpr int kObservationDim = 8;

// Affine input parameters per (layer, qubit): three weights then three biases.
inline constexpr std::size_t kAffineParamsPerQubit = 6;

enum class BackboneKind { kSeparable, kCZEntangled, kIsingZZEntangled, kClassicalMLP };

// Which qubit pairs receive an entangling gate in every layer.
enum class Topology { kRing, kChain };

std::string_view to_string(BackboneKind kind);
std::string_view to_string(Topology topology);
BackboneKind parse_backbone_kind(std::string_view text);
Topology parse_topology(std::string_view text);

struct BackboneConfig {
  BackboneKind kind = BackboneKind::kSeparable;
  int num_layers = 1;  // circuit kinds
  int hidden_dim = 0;  // MLP kind
  Topology topology = Topology::kRing;

  bool is_quantum() const { return kind != BackboneKind::kClassicalMLP; }
  void validate() const;
  // Short directory-safe name, e.g. "cz-L2" or "mlp-H16".
  std::string slug() const;

  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

// Parses a slug or "kind:size" spec such as "isingzz:3" or "mlp:256".
BackboneConfig parse_backbone_spec(std::string_view text);

std::size_t parameter_count(const BackboneConfig& config);

std::vector<std::pair<int, int>> entangler_pairs(Topology topology, int num_qubits);

// How one circuit angle is computed from the parameters and observation.
struct AngleBinding {
  static constexpr int kNoInput = -1;

  int input = kNoInput;    // observation element, or kNoInput for a raw angle
  std::size_t weight = 0;  // multiplies the input; the angle itself when raw
  std::size_t bias = 0;    // unused for raw angles
};

struct CircuitSpec {
  quantum::Circuit circuit;
  std::vector<AngleBinding> bindings;  // one per circuit angle
  std::size_t num_params = 0;
};

CircuitSpec build_pqc_circuit(const BackboneConfig& config);

std::vector<double> resolve_angles(const CircuitSpec& spec, std::span<const double> params,
                                   std::span<const double> obs);

struct BackboneGradients {
  std::vector<double> features;
  std::vector<double> params;
  std::vector<double> obs;
};

class Backbone {
 public:
  explicit Backbone(BackboneConfig config);

  const BackboneConfig& config() const { return config_; }
  std::size_t num_params() const { return num_params_; }
  const CircuitSpec* circuit_spec() const { return spec_ ? &*spec_ : nullptr; }

  std::vector<double> forward(std::span<const double> params, std::span<const double> obs) const;

  // J^T upstream for the parameters and the observation, plus the forward
  // features evaluated along the way.
  BackboneGradients backward(std::span<const double> params, std::span<const double> obs,
                             std::span<const double> upstream) const;

  // Circuit weights ~ N(0, 1), biases and RZZ angles ~ U(-pi, pi); MLP
  // layers orthogonal with gain sqrt(2).
  std::vector<double> init_params(nn::Rng& rng) const;

 private:
  void check_shapes(std::span<const double> params, std::span<const double> obs) const;

  // Separable circuits keep a product state, so they are evaluated as one
  // single-qubit register per qubit: the angle indices of each qubit's U3
  // gates and the shared single-qubit circuit.
  bool product_form() const { return config_.kind == BackboneKind::kSeparable; }

  BackboneConfig config_;
  std::size_t num_params_;
  std::optional<CircuitSpec> spec_;
  std::vector<std::vector<std::size_t>> qubit_angles_;
  quantum::Circuit qubit_circuit_;
  nn::DenseLayer hidden_;
  nn::DenseLayer output_;
};

}  // namespace qpong::backbone
