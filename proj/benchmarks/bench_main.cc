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

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "qpong/agent.h"
#include "qpong/backbone.h"
#include "qpong/pong.h"
#include "qpong/statevector.h"

namespace {

using namespace qpong;

void BM_ApplyU3(benchmark::State& state) {
  quantum::StateVector psi(static_cast<int>(state.range(0)));
  const auto m = quantum::u3_matrix(0.3, 0.2, 0.1);
  int q = 0;
  for (auto _ : state) {
    quantum::apply_matrix2(psi.amplitudes(), q, m);
    q = (q + 1) % psi.num_qubits();
    benchmark::DoNotOptimize(psi.amplitudes().data());
  }
}
BENCHMARK(BM_ApplyU3)->Arg(4)->Arg(8)->Arg(12);

void BM_ApplyRZZ(benchmark::State& state) {
  quantum::StateVector psi(8);
  const auto d = quantum::rzz_matrix(0.7);
  for (auto _ : state) {
    quantum::apply_diagonal4(psi.amplitudes(), 2, 5, d);
    benchmark::DoNotOptimize(psi.amplitudes().data());
  }
}
BENCHMARK(BM_ApplyRZZ);

backbone::BackboneConfig config_for(int kind, int layers) {
  return {static_cast<backbone::BackboneKind>(kind), layers, 0};
}

void BM_BackboneForward(benchmark::State& state) {
  const backbone::Backbone bb(config_for(static_cast<int>(state.range(0)),
                                         static_cast<int>(state.range(1))));
  nn::Rng rng(1);
  const auto params = bb.init_params(rng);
  const std::vector<double> obs{0.1, -0.2, 0.3, -0.4, 0.5, -0.6, 0.1, 0.2};
  for (auto _ : state) benchmark::DoNotOptimize(bb.forward(params, obs));
}
BENCHMARK(BM_BackboneForward)->Args({0, 1})->Args({1, 1})->Args({2, 1})->Args({1, 4});

void BM_BackboneBackward(benchmark::State& state) {
  const backbone::Backbone bb(config_for(static_cast<int>(state.range(0)),
                                         static_cast<int>(state.range(1))));
  nn::Rng rng(1);
  const auto params = bb.init_params(rng);
  const std::vector<double> obs{0.1, -0.2, 0.3, -0.4, 0.5, -0.6, 0.1, 0.2};
  const std::vector<double> up{1, -1, 0.5, -0.5, 0.25, -0.25, 0.1, -0.1};
  for (auto _ : state) benchmark::DoNotOptimize(bb.backward(params, obs, up));
}
BENCHMARK(BM_BackboneBackward)->Args({0, 1})->Args({1, 1})->Args({2, 1})->Args({1, 4});

void BM_CircuitJacobian(benchmark::State& state) {
  const auto spec = backbone::build_pqc_circuit(config_for(1, static_cast<int>(state.range(0))));
  std::vector<double> angles(spec.circuit.num_angles(), 0.4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(quantum::circuit_gradient(spec.circuit, angles));
  }
}
BENCHMARK(BM_CircuitJacobian)->Arg(1)->Arg(2);

void BM_EnvStep(benchmark::State& state) {
  env::PongEnv pong;
  pong.reset(1);
  std::mt19937_64 rng(2);
  for (auto _ : state) {
    if (pong.done()) pong.reset();
    benchmark::DoNotOptimize(pong.step(static_cast<env::Action>(rng() % 3)));
  }
}
BENCHMARK(BM_EnvStep);

}  // namespace

BENCHMARK_MAIN();
