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

#include <gtest/gtest.h>

#include "qpong/error.h"
#include "qpong/statevector.h"

namespace qpong::verify {
namespace {

TEST(Verify, PristineBuildPassesEverySuite) {
  const auto report = run_verification({});
  ASSERT_EQ(report.suites.size(), suite_names().size());
  for (const auto& s : report.suites) {
    EXPECT_TRUE(s.passed()) << s.name << "\n" << report.to_text();
    EXPECT_GT(s.checks, 0) << s.name;
  }
  EXPECT_TRUE(report.passed());
  EXPECT_NE(report.to_text().find("all suites passed"), std::string::npos);
}

TEST(Verify, InjectedGradientBugIsDetected) {
  VerifyOptions opt;
  opt.only = "circuit-gradient";
  opt.circuit_gradient = [](const quantum::Circuit& c, std::span<const double> angles) {
    Eigen::MatrixXd g = quantum::circuit_gradient(c, angles);
    g(0, 0) += 1e-3;
    return g;
  };
  const auto report = run_verification(opt);
  ASSERT_EQ(report.suites.size(), 1u);
  EXPECT_FALSE(report.passed());
  const auto* suite = report.find("circuit-gradient");
  ASSERT_NE(suite, nullptr);
  EXPECT_GT(suite->failures, 0);
  EXPECT_GT(suite->max_error, 1e-5);
  const std::string text = report.to_text();
  EXPECT_EQ(text.rfind("FAIL circuit-gradient", 0), 0u);
  EXPECT_NE(text.find("verification FAILED"), std::string::npos);
}

TEST(Verify, SingleSuiteSelectionAndUnknownName) {
  VerifyOptions opt;
  opt.only = "gae-oracle";
  const auto report = run_verification(opt);
  ASSERT_EQ(report.suites.size(), 1u);
  EXPECT_EQ(report.suites[0].name, "gae-oracle");
  EXPECT_EQ(report.find("cka-identities"), nullptr);
  opt.only = "no-such-suite";
  EXPECT_THROW(run_verification(opt), ConfigError);
}

TEST(Verify, ReferenceTableHasTwentyThreeRows) {
  const auto rows = reference_parameter_counts();
  EXPECT_EQ(rows.size(), 23u);
  for (const auto& row : rows) EXPECT_GT(row.expected, 0u);
}

}  // namespace
}  // namespace qpong::verify
