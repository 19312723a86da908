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

// Built-in invariant suite run by `qpong verify`: gate algebra, norm
// preservation against a dense-operator oracle, gradient checks against
// central finite differences, the separability invariant, the GAE oracle,
// CKA identities, the environment contract and the parameter-count table.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qpong/backbone.h"
#include "qpong/statevector.h"

namespace qpong::verify {

struct SuiteResult {
  std::string name;
  int checks = 0;
  int failures = 0;
  double max_error = 0.0;
  std::vector<std::string> messages;  // first few failures

  bool passed() const { return failures == 0 && checks > 0; }
};

struct VerifyReport {
  std::vector<SuiteResult> suites;

  bool passed() const;
  const SuiteResult* find(const std::string& name) const;
  // One line per suite: status, name, checks, failures, max error.
  std::string to_text() const;
};

// Jacobian d<X_i>/d angle_k of a circuit; quantum::circuit_gradient by
// default. Replaceable so a broken implementation can be checked to fail.
using GradientFn =
    std::function<Eigen::MatrixXd(const quantum::Circuit&, std::span<const double>)>;

struct VerifyOptions {
  std::uint64_t seed = 7;
  GradientFn circuit_gradient;
  std::optional<std::string> only;  // run a single suite by name
};

std::vector<std::string> suite_names();

VerifyReport run_verification(const VerifyOptions& options = {});

// The backbone configurations of the reference experiment matrix together
// with their expected trainable-parameter counts.
struct ParameterCountRow {
  backbone::BackboneConfig config;
  std::size_t expected;
};
std::vector<ParameterCountRow> reference_parameter_counts();

}  // namespace qpong::verify
