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

#include "qpong/verify.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "qpong/agent.h"
#include "qpong/analysis.h"
#include "qpong/error.h"
#include "qpong/pong.h"
#include "qpong/ppo.h"

namespace qpong::verify {
namespace {

using quantum::Circuit;
using quantum::Complex;
using quantum::Gate;
using quantum::GateKind;

constexpr int kMaxMessages = 5;
constexpr double kPi = std::numbers::pi;

class Suite {
 public:
  explicit Suite(std::string name) { result_.name = std::move(name); }

  // Records one check whose observed error must not exceed `tolerance`.
  void check(double error, double tolerance, const std::string& what) {
    ++result_.checks;
    const double e = std::isnan(error) ? std::numeric_limits<double>::infinity() : error;
    result_.max_error = std::max(result_.max_error, e);
    if (!(e <= tolerance)) fail(what + " (error " + format(e) + " > " + format(tolerance) + ")");
  }

  void expect(bool ok, const std::string& what) {
    ++result_.checks;
    if (!ok) fail(what);
  }

  SuiteResult finish() { return std::move(result_); }

 private:
  static std::string format(double v) {
    std::ostringstream out;
    out << std::setprecision(3) << std::scientific << v;
    return out.str();
  }

  void fail(const std::string& what) {
    ++result_.failures;
    if (static_cast<int>(result_.messages.size()) < kMaxMessages) result_.messages.push_back(what);
  }

  SuiteResult result_;
};

double uniform(nn::Rng& rng, double lo, double hi) { return lo + (hi - lo) * nn::uniform01(rng); }

double max_abs_diff(std::span<const Complex> a, std::span<const Complex> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double unitarity_error(const quantum::Matrix2& m) {
  Eigen::Matrix2cd u;
  u << m[0], m[1], m[2], m[3];
  return (u.adjoint() * u - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
}

double diag_unitarity_error(const quantum::Diagonal4& d) {
  double e = 0.0;
  for (const auto& x : d) e = std::max(e, std::abs(std::norm(x) - 1.0));
  return e;
}

double matrix_error(const quantum::Matrix2& m, const quantum::Matrix2& expected) {
  return max_abs_diff(m, expected);
}

Circuit random_circuit(nn::Rng& rng, int num_qubits, int num_gates) {
  Circuit c;
  c.num_qubits = num_qubits;
  for (int g = 0; g < num_gates; ++g) {
    const int q = static_cast<int>(rng() % static_cast<std::uint64_t>(num_qubits));
    const auto pick = num_qubits > 1 ? rng() % 3 : 0;
    if (pick == 0) {
      c.gates.push_back(Gate::U3(q));
      continue;
    }
    int r = static_cast<int>(rng() % static_cast<std::uint64_t>(num_qubits - 1));
    if (r >= q) ++r;
    c.gates.push_back(pick == 1 ? Gate::CZ(q, r) : Gate::RZZ(q, r));
  }
  return c;
}

std::vector<double> random_angles(nn::Rng& rng, std::size_t n) {
  std::vector<double> a(n);
  for (auto& x : a) x = uniform(rng, -kPi, kPi);
  return a;
}

// Full 2^n x 2^n operator of one gate, built by enumerating basis states.
Eigen::MatrixXcd dense_gate(const Gate& gate, std::span<const double> angles, int n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim, dim);
  if (gate.kind == GateKind::kU3) {
    const auto m = quantum::u3_matrix(angles[0], angles[1], angles[2]);
    for (Eigen::Index col = 0; col < dim; ++col) {
      const int bit = static_cast<int>((col >> gate.first) & 1);
      const Eigen::Index base = col & ~(Eigen::Index{1} << gate.first);
      for (int out = 0; out < 2; ++out) {
        op(base | (Eigen::Index{out} << gate.first), col) = m[static_cast<std::size_t>(2 * out + bit)];
      }
    }
    return op;
  }
  for (Eigen::Index col = 0; col < dim; ++col) {
    const int a = static_cast<int>((col >> gate.first) & 1);
    const int b = static_cast<int>((col >> gate.second) & 1);
    Complex phase;
    if (gate.kind == GateKind::kCZ) {
      phase = (a & b) ? -1.0 : 1.0;
    } else {
      phase = std::polar(1.0, (a == b ? -0.5 : 0.5) * angles[0]);
    }
    op(col, col) = phase;
  }
  return op;
}

Eigen::VectorXcd dense_run(const Circuit& c, std::span<const double> angles) {
  const Eigen::Index dim = Eigen::Index{1} << c.num_qubits;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
  psi(0) = 1.0;
  std::size_t offset = 0;
  for (const auto& g : c.gates) {
    const auto k = static_cast<std::size_t>(g.num_angles());
    psi = dense_gate(g, angles.subspan(offset, k), c.num_qubits) * psi;
    offset += k;
  }
  return psi;
}

// Relative error, or the absolute error when that is within `abs_tol`.
double gradient_error(double analytic, double numeric, double abs_tol) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_tol) return diff;
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  return scale > 0.0 ? diff / scale : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------- suites

SuiteResult gate_algebra(nn::Rng& rng) {
  Suite s("gate-algebra");
  for (int i = 0; i < 100; ++i) {
    const double t = uniform(rng, -4 * kPi, 4 * kPi);
    const double l = uniform(rng, -4 * kPi, 4 * kPi);
    const double d = uniform(rng, -4 * kPi, 4 * kPi);
    s.check(unitarity_error(quantum::u3_matrix(t, l, d)), 1e-12, "U3 unitarity");
    s.check(diag_unitarity_error(quantum::rzz_matrix(t)), 1e-12, "RZZ unitarity");
  }
  const double r = 1.0 / std::numbers::sqrt2;
  s.check(matrix_error(quantum::u3_matrix(0, 0, 0), {1.0, 0.0, 0.0, 1.0}), 1e-12, "U3(0,0,0) = I");
  s.check(matrix_error(quantum::u3_matrix(kPi, 0, kPi), {0.0, 1.0, 1.0, 0.0}), 1e-12,
          "U3(pi,0,pi) = X");
  s.check(matrix_error(quantum::u3_matrix(kPi / 2, 0, kPi), {r, r, r, -r}), 1e-12,
          "U3(pi/2,0,pi) = H");
  const Complex i{0.0, 1.0};
  s.check(max_abs_diff(quantum::rzz_matrix(0.0), quantum::Diagonal4{1.0, 1.0, 1.0, 1.0}), 1e-12,
          "RZZ(0) = I");
  s.check(max_abs_diff(quantum::rzz_matrix(kPi), quantum::Diagonal4{-i, i, i, -i}), 1e-12,
          "RZZ(pi) = diag(-i, i, i, -i)");
  s.check(max_abs_diff(quantum::rzz_matrix(2 * kPi), quantum::Diagonal4{-1.0, -1.0, -1.0, -1.0}),
          1e-12, "RZZ(2 pi) = -I");

  // Symmetric two-qubit gates: swapping the targets leaves the state unchanged.
  for (int trial = 0; trial < 20; ++trial) {
    Circuit prep = random_circuit(rng, 4, 12);
    const auto angles = random_angles(rng, prep.num_angles());
    const auto base = quantum::run_circuit(prep, angles);
    const double theta = uniform(rng, -kPi, kPi);
    for (GateKind kind : {GateKind::kCZ, GateKind::kRZZ}) {
      quantum::StateVector ab = base;
      quantum::StateVector ba = base;
      const std::vector<double> a{theta};
      const std::span<const double> gate_angles =
          kind == GateKind::kRZZ ? std::span<const double>(a) : std::span<const double>();
      quantum::apply_gate(ab, {kind, 1, 3}, gate_angles);
      quantum::apply_gate(ba, {kind, 3, 1}, gate_angles);
      s.expect(std::equal(ab.amplitudes().begin(), ab.amplitudes().end(), ba.amplitudes().begin()),
               "two-qubit gate symmetric in its targets");
    }
  }
  return s.finish();
}

SuiteResult norm_preservation(nn::Rng& rng) {
  Suite s("norm-preservation");
  for (int i = 0; i < 1000; ++i) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const Circuit c = random_circuit(rng, n, 4 + static_cast<int>(rng() % 20));
    const auto angles = random_angles(rng, c.num_angles());
    const auto state = quantum::run_circuit(c, angles);
    s.check(std::abs(state.norm_squared() - 1.0), 1e-12, "norm after random circuit");
  }
  for (int i = 0; i < 100; ++i) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const Circuit c = random_circuit(rng, n, 2 + static_cast<int>(rng() % 10));
    const auto angles = random_angles(rng, c.num_angles());
    const auto state = quantum::run_circuit(c, angles);
    const Eigen::VectorXcd dense = dense_run(c, angles);
    const std::vector<Complex> expected(dense.data(), dense.data() + dense.size());
    s.check(max_abs_diff(state.amplitudes(), expected), 1e-10, "dense-operator oracle");

    quantum::StateVector back = state;
    std::size_t offset = c.num_angles();
    for (auto g = c.gates.rbegin(); g != c.gates.rend(); ++g) {
      const auto k = static_cast<std::size_t>(g->num_angles());
      offset -= k;
      quantum::apply_gate_inverse(back, *g, std::span<const double>(angles).subspan(offset, k));
    }
    s.check(std::abs(back[0] - 1.0), 1e-10, "circuit followed by its inverse");
  }
  return s.finish();
}

SuiteResult circuit_gradients(nn::Rng& rng, const GradientFn& gradient) {
  Suite s("circuit-gradient");
  constexpr double h = 1e-5;
  for (int inst = 0; inst < 50; ++inst) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const Circuit c = random_circuit(rng, n, 3 + static_cast<int>(rng() % 10));
    auto angles = random_angles(rng, c.num_angles());
    const Eigen::MatrixXd jac = gradient(c, angles);
    if (jac.rows() != n || jac.cols() != static_cast<Eigen::Index>(angles.size())) {
      s.expect(false, "gradient has the wrong shape");
      continue;
    }
    for (std::size_t k = 0; k < angles.size(); ++k) {
      const double saved = angles[k];
      angles[k] = saved + h;
      const auto plus = quantum::pauli_x_expectations(quantum::run_circuit(c, angles));
      angles[k] = saved - h;
      const auto minus = quantum::pauli_x_expectations(quantum::run_circuit(c, angles));
      angles[k] = saved;
      for (int q = 0; q < n; ++q) {
        const double numeric = (plus[static_cast<std::size_t>(q)] - minus[static_cast<std::size_t>(q)]) / (2 * h);
        s.check(gradient_error(jac(q, static_cast<Eigen::Index>(k)), numeric, 1e-7), 1e-5,
                "d<X_" + std::to_string(q) + ">/d angle " + std::to_string(k));
      }
    }
    // The vector-Jacobian product must agree with the Jacobian it contracts.
    std::vector<double> upstream(static_cast<std::size_t>(n));
    for (auto& u : upstream) u = uniform(rng, -1.0, 1.0);
    const auto vjp = quantum::expectation_vjp(c, angles, upstream);
    const Eigen::VectorXd expected =
        jac.transpose() * Eigen::Map<const Eigen::VectorXd>(upstream.data(), n);
    for (std::size_t k = 0; k < angles.size(); ++k) {
      s.check(gradient_error(vjp.angle_grad[k], expected(static_cast<Eigen::Index>(k)), 1e-7),
              1e-5, "expectation VJP against Jacobian");
    }
  }
  return s.finish();
}

SuiteResult backbone_gradients(nn::Rng& rng) {
  Suite s("backbone-gradient");
  using backbone::BackboneKind;
  constexpr double h = 1e-5;
  std::vector<backbone::BackboneConfig> configs;
  for (int l : {1, 2}) {
    configs.push_back({BackboneKind::kSeparable, l, 0});
    configs.push_back({BackboneKind::kCZEntangled, l, 0});
    configs.push_back({BackboneKind::kIsingZZEntangled, l, 0});
  }
  configs.push_back({BackboneKind::kClassicalMLP, 0, 4});
  configs.push_back({BackboneKind::kClassicalMLP, 0, 8});
  for (const auto& cfg : configs) {
    const backbone::Backbone bb(cfg);
    auto params = bb.init_params(rng);
    std::vector<double> obs(backbone::kObservationDim);
    for (auto& x : obs) x = uniform(rng, -1.0, 1.0);
    std::vector<double> upstream(backbone::kFeatureDim);
    for (auto& u : upstream) u = uniform(rng, -1.0, 1.0);
    const auto grads = bb.backward(params, obs, upstream);
    auto objective = [&](std::span<const double> p, std::span<const double> x) {
      const auto f = bb.forward(p, x);
      double v = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) v += f[i] * upstream[i];
      return v;
    };
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double saved = params[k];
      params[k] = saved + h;
      const double plus = objective(params, obs);
      params[k] = saved - h;
      const double minus = objective(params, obs);
      params[k] = saved;
      s.check(gradient_error(grads.params[k], (plus - minus) / (2 * h), 1e-7), 1e-5,
              cfg.slug() + " parameter " + std::to_string(k));
    }
    for (std::size_t j = 0; j < obs.size(); ++j) {
      const double saved = obs[j];
      obs[j] = saved + h;
      const double plus = objective(params, obs);
      obs[j] = saved - h;
      const double minus = objective(params, obs);
      obs[j] = saved;
      s.check(gradient_error(grads.obs[j], (plus - minus) / (2 * h), 1e-7), 1e-5,
              cfg.slug() + " observation " + std::to_string(j));
    }
  }
  return s.finish();
}

// Random minibatch whose ratios stay well inside (1 - eps, 1 + eps), so the
// loss is smooth at the probe point.
ppo::Batch probe_batch(const ppo::ActorCritic& agent, std::span<const double> params,
                       nn::Rng& rng, std::size_t n) {
  ppo::Batch b;
  for (std::size_t i = 0; i < n; ++i) {
    env::Observation obs{};
    for (auto& x : obs) x = uniform(rng, -1.0, 1.0);
    const auto out = agent.forward(params, obs);
    const int action = static_cast<int>(rng() % env::kNumActions);
    b.obs.push_back(obs);
    b.actions.push_back(action);
    b.old_logprobs.push_back(nn::categorical_logprob(out.logits, action) + uniform(rng, -0.05, 0.05));
    b.old_values.push_back(out.value);
    b.advantages.push_back(uniform(rng, -1.0, 1.0));
    b.returns.push_back(out.value + uniform(rng, -1.0, 1.0));
  }
  return b;
}

SuiteResult loss_gradients(nn::Rng& rng) {
  Suite s("ppo-loss-gradient");
  using backbone::BackboneKind;
  constexpr double h = 1e-5;
  ppo::PpoConfig config;
  const std::vector<backbone::BackboneConfig> configs = {
      {BackboneKind::kSeparable, 1, 0}, {BackboneKind::kCZEntangled, 2, 0},
      {BackboneKind::kIsingZZEntangled, 1, 0}, {BackboneKind::kClassicalMLP, 0, 8}};
  for (const auto& cfg : configs) {
    const ppo::ActorCritic agent(cfg);
    auto params = agent.init_params(rng);
    // Larger head weights than the default init so every term contributes.
    for (std::size_t k = agent.actor_offset(); k < params.size(); ++k) {
      params[k] = uniform(rng, -0.5, 0.5);
    }
    const ppo::Batch batch = probe_batch(agent, params, rng, 8);
    std::vector<double> grad;
    ppo::agent_loss(agent, params, batch, config, &grad);

    std::vector<std::size_t> probes;
    const std::size_t backbone_n = agent.actor_offset();
    for (int i = 0; i < 10; ++i) probes.push_back(rng() % backbone_n);
    for (int i = 0; i < 10; ++i) {
      probes.push_back(backbone_n + rng() % (params.size() - backbone_n));
    }
    for (std::size_t k : probes) {
      const double saved = params[k];
      params[k] = saved + h;
      const double plus = ppo::agent_loss(agent, params, batch, config, nullptr).total;
      params[k] = saved - h;
      const double minus = ppo::agent_loss(agent, params, batch, config, nullptr).total;
      params[k] = saved;
      s.check(gradient_error(grad[k], (plus - minus) / (2 * h), 1e-7), 1e-4,
              cfg.slug() + " loss gradient, parameter " + std::to_string(k));
    }
  }
  return s.finish();
}

SuiteResult separability(nn::Rng& rng) {
  Suite s("separability");
  using backbone::BackboneKind;
  for (int l : {1, 2}) {
    const backbone::Backbone sep({BackboneKind::kSeparable, l, 0});
    const auto params = sep.init_params(rng);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<double> obs(backbone::kObservationDim);
      for (auto& x : obs) x = uniform(rng, -1.0, 1.0);
      const auto base = sep.forward(params, obs);
      const auto j = rng() % obs.size();
      obs[j] = uniform(rng, -1.0, 1.0);
      const auto moved = sep.forward(params, obs);
      bool invariant = true;
      for (std::size_t i = 0; i < base.size(); ++i) {
        if (i != j && moved[i] != base[i]) invariant = false;
      }
      s.expect(invariant, "separable feature changed under another element's perturbation");
    }
  }
  for (BackboneKind kind : {BackboneKind::kCZEntangled, BackboneKind::kIsingZZEntangled}) {
    const backbone::Backbone bb({kind, 1, 0});
    const auto params = bb.init_params(rng);
    double largest = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> obs(backbone::kObservationDim);
      for (auto& x : obs) x = uniform(rng, -1.0, 1.0);
      const auto base = bb.forward(params, obs);
      for (std::size_t j = 0; j < obs.size(); ++j) {
        auto moved_obs = obs;
        moved_obs[j] = uniform(rng, -1.0, 1.0);
        const auto moved = bb.forward(params, moved_obs);
        for (std::size_t i = 0; i < base.size(); ++i) {
          if (i != j) largest = std::max(largest, std::abs(moved[i] - base[i]));
        }
      }
    }
    s.expect(largest > 1e-6, std::string(backbone::to_string(kind)) +
                                 ": no cross-qubit dependence detected");
  }
  return s.finish();
}

SuiteResult gae_oracle(nn::Rng& rng) {
  Suite s("gae-oracle");
  for (int inst = 0; inst < 100; ++inst) {
    const int steps = 1 + static_cast<int>(rng() % 32);
    const int envs = 1 + static_cast<int>(rng() % 4);
    const double gamma = uniform(rng, 0.8, 1.0);
    const double lambda = uniform(rng, 0.0, 1.0);
    ppo::RolloutBuffer buf(steps, envs);
    for (std::size_t i = 0; i < buf.size(); ++i) {
      buf.rewards[i] = static_cast<double>(static_cast<int>(rng() % 3) - 1);
      buf.values[i] = uniform(rng, -2.0, 2.0);
      buf.dones[i] = nn::uniform01(rng) < 0.15 ? 1.0 : 0.0;
    }
    std::vector<double> boot_v(static_cast<std::size_t>(envs));
    std::vector<double> boot_d(static_cast<std::size_t>(envs));
    for (int e = 0; e < envs; ++e) {
      boot_v[static_cast<std::size_t>(e)] = uniform(rng, -2.0, 2.0);
      boot_d[static_cast<std::size_t>(e)] = nn::uniform01(rng) < 0.2 ? 1.0 : 0.0;
    }
    const auto est = ppo::compute_gae(buf, boot_v, boot_d, gamma, lambda);
    for (int e = 0; e < envs; ++e) {
      auto value_at = [&](int t) {
        return t < steps ? buf.values[buf.index(t, e)] : boot_v[static_cast<std::size_t>(e)];
      };
      auto starts_episode = [&](int t) {
        return t < steps ? buf.dones[buf.index(t, e)] : boot_d[static_cast<std::size_t>(e)];
      };
      for (int t = 0; t < steps; ++t) {
        double sum = 0.0;
        double weight = 1.0;
        for (int k = t; k < steps; ++k) {
          const double live = 1.0 - starts_episode(k + 1);
          const double delta =
              buf.rewards[buf.index(k, e)] + gamma * value_at(k + 1) * live - value_at(k);
          sum += weight * delta;
          if (live == 0.0) break;
          weight *= gamma * lambda;
        }
        const auto i = buf.index(t, e);
        s.check(std::abs(est.advantages[i] - sum), 1e-12, "GAE against definitional sum");
        s.check(std::abs(est.returns[i] - (sum + buf.values[i])), 1e-12, "return target");
      }
    }
  }
  return s.finish();
}

// HSIC with linear kernels: tr(K H L H) / (n - 1)^2.
double hsic(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n) -
                            Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd k = x * x.transpose();
  const Eigen::MatrixXd l = y * y.transpose();
  return (k * h * l * h).trace() / static_cast<double>((n - 1) * (n - 1));
}

SuiteResult cka_identities(nn::Rng& rng) {
  Suite s("cka-identities");
  std::normal_distribution<double> normal;
  auto gaussian = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
  };
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng() % 30);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng() % 8);
    const Eigen::MatrixXd x = gaussian(n, p);
    const Eigen::Index p2 = 1 + static_cast<Eigen::Index>(rng() % 8);
    // Half of the pairs share a linear component so CKA spans its range.
    Eigen::MatrixXd y = gaussian(n, p2);
    if (i % 2 == 1) y += x * gaussian(p, p2);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(p, p)).householderQ();
    const double c = std::array{-3.0, 0.5, 10.0}[static_cast<std::size_t>(i % 3)];

    const double xy = analysis::linear_cka(x, y);
    s.check(std::abs(analysis::linear_cka(x, x) - 1.0), 1e-10, "CKA(X, X) = 1");
    s.check(std::abs(analysis::linear_cka(x, x * q) - 1.0), 1e-10, "orthogonal invariance");
    s.check(std::abs(analysis::linear_cka(x, c * x) - 1.0), 1e-10, "scale invariance");
    s.check(std::abs(analysis::linear_cka(x * q, y) - xy), 1e-10, "orthogonal invariance, pair");
    s.check(std::abs(analysis::linear_cka(y, x) - xy), 1e-12, "symmetry");
    s.expect(xy >= -1e-10 && xy <= 1.0 + 1e-10, "CKA within [0, 1]");
    const double oracle = hsic(x, y) / std::sqrt(hsic(x, x) * hsic(y, y));
    s.check(std::abs(xy - oracle), 1e-10, "HSIC oracle");
  }
  const Eigen::MatrixXd wide_x = gaussian(1000, 8);
  const Eigen::MatrixXd wide_y = gaussian(1000, 8);
  s.expect(analysis::linear_cka(wide_x, wide_y) < 0.1, "independent Gaussians have CKA < 0.1");
  return s.finish();
}

SuiteResult environment_contract(nn::Rng& rng) {
  Suite s("environment");
  const env::PongPhysics physics;
  for (int ep = 0; ep < 200; ++ep) {
    const std::uint64_t seed = rng();
    const std::uint64_t action_seed = rng();
    auto play = [&](std::vector<env::Observation>& trace, std::vector<double>& rewards,
                    double& opponent_total) {
      env::PongEnv pong(physics);
      nn::Rng actions(action_seed);
      trace.push_back(pong.reset(seed));
      opponent_total = 0.0;
      while (!pong.done()) {
        const auto r = pong.step(static_cast<env::Action>(actions() % 3));
        trace.push_back(r.obs);
        rewards.push_back(r.reward);
        opponent_total += r.opponent_reward;
      }
      return pong.state();
    };
    std::vector<env::Observation> trace_a, trace_b;
    std::vector<double> rewards_a, rewards_b;
    double opp_a = 0.0, opp_b = 0.0;
    const auto final_state = play(trace_a, rewards_a, opp_a);
    play(trace_b, rewards_b, opp_b);
    s.expect(trace_a == trace_b && rewards_a == rewards_b, "same seed and actions replay bit-identically");

    double total = 0.0;
    for (double r : rewards_a) total += r;
    const double diff = final_state.score_right - final_state.score_left;
    s.check(std::abs(total - diff), 0.0, "episodic return equals s_r - s_l");
    s.check(std::abs(opp_a + total), 0.0, "opponent return is the negation");
    s.expect(total == std::round(total) && total >= -21 && total <= 21,
             "return is an integer in [-21, 21]");
    if (!final_state.truncated) {
      s.expect(std::max(final_state.score_left, final_state.score_right) == physics.winning_score,
               "terminated episodes end at the winning score");
    }
  }
  return s.finish();
}

SuiteResult parameter_counts() {
  Suite s("parameter-counts");
  for (const auto& row : reference_parameter_counts()) {
    const auto got = backbone::parameter_count(row.config);
    s.expect(got == row.expected, row.config.slug() + ": " + std::to_string(got) + " != " +
                                      std::to_string(row.expected));
    if (row.config.is_quantum()) {
      const auto spec = backbone::build_pqc_circuit(row.config);
      s.expect(spec.num_params == row.expected, row.config.slug() + ": circuit parameter count");
    }
    s.expect(backbone::Backbone(row.config).num_params() == row.expected,
             row.config.slug() + ": backbone parameter vector length");
  }
  return s.finish();
}

}  // namespace

bool VerifyReport::passed() const {
  return !suites.empty() &&
         std::all_of(suites.begin(), suites.end(), [](const SuiteResult& r) { return r.passed(); });
}

const SuiteResult* VerifyReport::find(const std::string& name) const {
  for (const auto& r : suites) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::string VerifyReport::to_text() const {
  std::ostringstream out;
  for (const auto& r : suites) {
    out << (r.passed() ? "PASS " : "FAIL ") << std::left << std::setw(20) << r.name
        << " checks=" << r.checks << " failures=" << r.failures << " max_error=" << std::scientific
        << std::setprecision(3) << r.max_error << std::defaultfloat << '\n';
    for (const auto& m : r.messages) out << "    " << m << '\n';
  }
  out << (passed() ? "all suites passed" : "verification FAILED") << '\n';
  return out.str();
}

std::vector<std::string> suite_names() {
  return {"gate-algebra",      "norm-preservation", "circuit-gradient",
          "backbone-gradient", "ppo-loss-gradient", "separability",
          "gae-oracle",        "cka-identities",    "environment",
          "parameter-counts"};
}

std::vector<ParameterCountRow> reference_parameter_counts() {
  using backbone::BackboneKind;
  std::vector<ParameterCountRow> rows;
  for (int l = 1; l <= 6; ++l) {
    rows.push_back({{BackboneKind::kSeparable, l, 0}, static_cast<std::size_t>(48 * l)});
  }
  for (int l = 1; l <= 6; ++l) {
    rows.push_back({{BackboneKind::kCZEntangled, l, 0}, static_cast<std::size_t>(48 * l)});
  }
  for (int l = 1; l <= 6; ++l) {
    rows.push_back({{BackboneKind::kIsingZZEntangled, l, 0}, static_cast<std::size_t>(56 * l)});
  }
  for (int h : {4, 8, 16, 21, 256}) {
    rows.push_back({{BackboneKind::kClassicalMLP, 0, h}, static_cast<std::size_t>(16 * h)});
  }
  return rows;
}

VerifyReport run_verification(const VerifyOptions& options) {
  if (options.only) {
    const auto names = suite_names();
    if (std::find(names.begin(), names.end(), *options.only) == names.end()) {
      throw ConfigError("unknown verification suite '" + *options.only + "'");
    }
  }
  const GradientFn gradient =
      options.circuit_gradient
          ? options.circuit_gradient
          : [](const Circuit& c, std::span<const double> a) { return quantum::circuit_gradient(c, a); };

  VerifyReport report;
  std::uint64_t index = 0;
  auto run = [&](const std::string& name, auto&& body) {
    const std::uint64_t stream = index++;
    if (options.only && *options.only != name) return;
    nn::Rng rng = ppo::derive_rng(options.seed, 100, stream);
    try {
      report.suites.push_back(body(rng));
    } catch (const std::exception& e) {
      SuiteResult r;
      r.name = name;
      r.checks = 1;
      r.failures = 1;
      r.messages.push_back(std::string("exception: ") + e.what());
      report.suites.push_back(std::move(r));
    }
  };
  run("gate-algebra", [](nn::Rng& rng) { return gate_algebra(rng); });
  run("norm-preservation", [](nn::Rng& rng) { return norm_preservation(rng); });
  run("circuit-gradient", [&](nn::Rng& rng) { return circuit_gradients(rng, gradient); });
  run("backbone-gradient", [](nn::Rng& rng) { return backbone_gradients(rng); });
  run("ppo-loss-gradient", [](nn::Rng& rng) { return loss_gradients(rng); });
  run("separability", [](nn::Rng& rng) { return separability(rng); });
  run("gae-oracle", [](nn::Rng& rng) { return gae_oracle(rng); });
  run("cka-identities", [](nn::Rng& rng) { return cka_identities(rng); });
  run("environment", [](nn::Rng& rng) { return environment_contract(rng); });
  run("parameter-counts", [](nn::Rng&) { return parameter_counts(); });
  return report;
}

}  // namespace qpong::verify
