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

#include <charconv>
#include <cmath>
#include <numbers>

#include "qpong/error.h"

namespace qpong::backbone {
namespace {

std::size_t per_layer_params(const BackboneConfig& config) {
  const std::size_t encoding = kAffineParamsPerQubit * kNumQubits;
  if (config.kind == BackboneKind::kIsingZZEntangled) {
    return encoding + entangler_pairs(config.topology, kNumQubits).size();
  }
  return encoding;
}

int parse_positive(std::string_view text, std::string_view what) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || value <= 0) {
    throw ConfigError("invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::string_view to_string(BackboneKind kind) {
  switch (kind) {
    case BackboneKind::kSeparable:
      return "separable";
    case BackboneKind::kCZEntangled:
      return "cz";
    case BackboneKind::kIsingZZEntangled:
      return "isingzz";
    case BackboneKind::kClassicalMLP:
      return "mlp";
  }
  return "unknown";
}

std::string_view to_string(Topology topology) {
  return topology == Topology::kRing ? "ring" : "chain";
}

BackboneKind parse_backbone_kind(std::string_view text) {
  if (text == "separable") return BackboneKind::kSeparable;
  if (text == "cz" || text == "cz-entangled") return BackboneKind::kCZEntangled;
  if (text == "isingzz" || text == "isingzz-entangled") return BackboneKind::kIsingZZEntangled;
  if (text == "mlp" || text == "classical") return BackboneKind::kClassicalMLP;
  throw ConfigError("unknown backbone kind '" + std::string(text) + "'");
}

Topology parse_topology(std::string_view text) {
  if (text == "ring") return Topology::kRing;
  if (text == "chain") return Topology::kChain;
  throw ConfigError("unknown entangler topology '" + std::string(text) + "'");
}

void BackboneConfig::validate() const {
  if (is_quantum()) {
    if (num_layers <= 0) throw ConfigError("circuit backbones need at least one layer");
  } else if (hidden_dim <= 0) {
    throw ConfigError("MLP backbone needs a positive hidden dimension");
  }
}

std::string BackboneConfig::slug() const {
  std::string s(to_string(kind));
  if (is_quantum()) {
    s += "-L" + std::to_string(num_layers);
    if (topology != Topology::kRing && kind != BackboneKind::kSeparable) {
      s += "-" + std::string(to_string(topology));
    }
  } else {
    s += "-H" + std::to_string(hidden_dim);
  }
  return s;
}

BackboneConfig parse_backbone_spec(std::string_view text) {
  BackboneConfig config;
  std::string_view kind_text;
  std::string_view size_text;
  if (const auto colon = text.find(':'); colon != std::string_view::npos) {
    kind_text = text.substr(0, colon);
    size_text = text.substr(colon + 1);
  } else if (const auto dash = text.rfind("-L"); dash != std::string_view::npos) {
    kind_text = text.substr(0, dash);
    size_text = text.substr(dash + 2);
  } else if (const auto dash_h = text.rfind("-H"); dash_h != std::string_view::npos) {
    kind_text = text.substr(0, dash_h);
    size_text = text.substr(dash_h + 2);
  } else {
    throw ConfigError("backbone spec '" + std::string(text) + "' needs a size, e.g. cz:2");
  }
  config.kind = parse_backbone_kind(kind_text);
  const int size = parse_positive(size_text, "backbone size");
  if (config.is_quantum()) {
    config.num_layers = size;
  } else {
    config.num_layers = 0;
    config.hidden_dim = size;
  }
  return config;
}

std::size_t parameter_count(const BackboneConfig& config) {
  config.validate();
  if (!config.is_quantum()) {
    const auto h = static_cast<std::size_t>(config.hidden_dim);
    return kObservationDim * h + h * kFeatureDim;
  }
  return per_layer_params(config) * static_cast<std::size_t>(config.num_layers);
}

std::vector<std::pair<int, int>> entangler_pairs(Topology topology, int num_qubits) {
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i + 1 < num_qubits; ++i) pairs.emplace_back(i, i + 1);
  if (topology == Topology::kRing && num_qubits > 2) pairs.emplace_back(num_qubits - 1, 0);
  return pairs;
}

CircuitSpec build_pqc_circuit(const BackboneConfig& config) {
  config.validate();
  if (!config.is_quantum()) throw ConfigError("MLP backbone has no circuit");

  CircuitSpec spec;
  spec.circuit.num_qubits = kNumQubits;
  const std::size_t stride = per_layer_params(config);
  const auto pairs = entangler_pairs(config.topology, kNumQubits);

  for (int layer = 0; layer < config.num_layers; ++layer) {
    const std::size_t base = stride * static_cast<std::size_t>(layer);
    for (int q = 0; q < kNumQubits; ++q) {
      spec.circuit.gates.push_back(quantum::Gate::U3(q));
      const std::size_t qbase = base + kAffineParamsPerQubit * static_cast<std::size_t>(q);
      for (std::size_t k = 0; k < 3; ++k) {
        spec.bindings.push_back({q, qbase + k, qbase + 3 + k});
      }
    }
    std::size_t raw = base + kAffineParamsPerQubit * kNumQubits;
    for (const auto& [a, b] : pairs) {
      if (config.kind == BackboneKind::kCZEntangled) {
        spec.circuit.gates.push_back(quantum::Gate::CZ(a, b));
      } else if (config.kind == BackboneKind::kIsingZZEntangled) {
        spec.circuit.gates.push_back(quantum::Gate::RZZ(a, b));
        spec.bindings.push_back({AngleBinding::kNoInput, raw++, 0});
      }
    }
  }
  spec.num_params = stride * static_cast<std::size_t>(config.num_layers);
  return spec;
}

std::vector<double> resolve_angles(const CircuitSpec& spec, std::span<const double> params,
                                   std::span<const double> obs) {
  std::vector<double> angles(spec.bindings.size());
  for (std::size_t k = 0; k < spec.bindings.size(); ++k) {
    const AngleBinding& b = spec.bindings[k];
    if (b.input == AngleBinding::kNoInput) {
      angles[k] = params[b.weight];
    } else {
      angles[k] = params[b.weight] * obs[static_cast<std::size_t>(b.input)] + params[b.bias];
    }
  }
  return angles;
}

Backbone::Backbone(BackboneConfig config)
    : config_(config), num_params_(parameter_count(config)) {
  if (config_.is_quantum()) {
    spec_ = build_pqc_circuit(config_);
    if (product_form()) {
      qubit_angles_.resize(kNumQubits);
      std::size_t angle = 0;
      for (const auto& gate : spec_->circuit.gates) {
        for (int k = 0; k < gate.num_angles(); ++k) {
          qubit_angles_[static_cast<std::size_t>(gate.first)].push_back(angle++);
        }
      }
      qubit_circuit_.num_qubits = 1;
      qubit_circuit_.gates.assign(static_cast<std::size_t>(config_.num_layers), quantum::Gate::U3(0));
    }
  } else {
    hidden_ = {kObservationDim, config_.hidden_dim, false};
    output_ = {config_.hidden_dim, kFeatureDim, false};
  }
}

void Backbone::check_shapes(std::span<const double> params, std::span<const double> obs) const {
  if (params.size() != num_params_) {
    throw ConfigError("backbone " + config_.slug() + " expects " + std::to_string(num_params_) +
                      " parameters, got " + std::to_string(params.size()));
  }
  if (obs.size() != kObservationDim) {
    throw ConfigError("observation must have " + std::to_string(kObservationDim) + " elements");
  }
}

std::vector<double> Backbone::forward(std::span<const double> params,
                                      std::span<const double> obs) const {
  check_shapes(params, obs);
  if (spec_) {
    const auto angles = resolve_angles(*spec_, params, obs);
    if (product_form()) {
      std::vector<double> features(kFeatureDim);
      std::vector<double> local;
      for (std::size_t q = 0; q < features.size(); ++q) {
        local.clear();
        for (std::size_t k : qubit_angles_[q]) local.push_back(angles[k]);
        features[q] = quantum::pauli_x_expectations(quantum::run_circuit(qubit_circuit_, local))[0];
      }
      return features;
    }
    return quantum::pauli_x_expectations(quantum::run_circuit(spec_->circuit, angles));
  }
  const Eigen::Map<const Eigen::VectorXd> x(obs.data(), kObservationDim);
  const auto w1 = params.first(hidden_.num_params());
  const auto w2 = params.subspan(hidden_.num_params());
  const Eigen::VectorXd h = nn::linear_forward(hidden_, w1, x).array().tanh();
  const Eigen::VectorXd f = nn::linear_forward(output_, w2, h);
  return {f.data(), f.data() + f.size()};
}

BackboneGradients Backbone::backward(std::span<const double> params, std::span<const double> obs,
                                     std::span<const double> upstream) const {
  check_shapes(params, obs);
  if (upstream.size() != kFeatureDim) {
    throw ConfigError("upstream gradient must have " + std::to_string(kFeatureDim) + " elements");
  }
  BackboneGradients out;
  out.params.assign(num_params_, 0.0);
  out.obs.assign(kObservationDim, 0.0);

  if (spec_) {
    const auto angles = resolve_angles(*spec_, params, obs);
    quantum::ExpectationVjp vjp;
    if (product_form()) {
      vjp.expectations.assign(kFeatureDim, 0.0);
      vjp.angle_grad.assign(angles.size(), 0.0);
      std::vector<double> local;
      for (std::size_t q = 0; q < kFeatureDim; ++q) {
        local.clear();
        for (std::size_t k : qubit_angles_[q]) local.push_back(angles[k]);
        const auto single = quantum::expectation_vjp(qubit_circuit_, local, upstream.subspan(q, 1));
        vjp.expectations[q] = single.expectations[0];
        for (std::size_t j = 0; j < local.size(); ++j) {
          vjp.angle_grad[qubit_angles_[q][j]] = single.angle_grad[j];
        }
      }
    } else {
      vjp = quantum::expectation_vjp(spec_->circuit, angles, upstream);
    }
    out.features = std::move(vjp.expectations);
    for (std::size_t k = 0; k < spec_->bindings.size(); ++k) {
      const AngleBinding& b = spec_->bindings[k];
      const double g = vjp.angle_grad[k];
      if (b.input == AngleBinding::kNoInput) {
        out.params[b.weight] += g;
      } else {
        const auto i = static_cast<std::size_t>(b.input);
        out.params[b.weight] += g * obs[i];
        out.params[b.bias] += g;
        out.obs[i] += g * params[b.weight];
      }
    }
    return out;
  }

  const Eigen::Map<const Eigen::VectorXd> x(obs.data(), kObservationDim);
  const Eigen::Map<const Eigen::VectorXd> u(upstream.data(), kFeatureDim);
  const std::size_t n1 = hidden_.num_params();
  const auto w1 = params.first(n1);
  const auto w2 = params.subspan(n1);
  const Eigen::VectorXd h = nn::linear_forward(hidden_, w1, x).array().tanh();
  const Eigen::VectorXd f = nn::linear_forward(output_, w2, h);
  out.features.assign(f.data(), f.data() + f.size());

  const Eigen::VectorXd grad_h =
      nn::linear_backward(output_, w2, h, u, std::span<double>(out.params).subspan(n1));
  const Eigen::VectorXd grad_pre = grad_h.array() * (1.0 - h.array().square());
  const Eigen::VectorXd grad_x =
      nn::linear_backward(hidden_, w1, x, grad_pre, std::span<double>(out.params).first(n1));
  out.obs.assign(grad_x.data(), grad_x.data() + grad_x.size());
  return out;
}

std::vector<double> Backbone::init_params(nn::Rng& rng) const {
  std::vector<double> params(num_params_, 0.0);
  if (spec_) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
    for (const AngleBinding& b : spec_->bindings) {
      if (b.input == AngleBinding::kNoInput) {
        params[b.weight] = phase(rng);
      } else {
        params[b.weight] = normal(rng);
        params[b.bias] = phase(rng);
      }
    }
    return params;
  }
  const std::size_t n1 = hidden_.num_params();
  nn::orthogonal_init(hidden_, std::sqrt(2.0), 0.0, rng, std::span<double>(params).first(n1));
  nn::orthogonal_init(output_, std::sqrt(2.0), 0.0, rng, std::span<double>(params).subspan(n1));
  return params;
}

}  // namespace qpong::backbone
