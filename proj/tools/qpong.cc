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

// qpong: train, analyze, verify and replay hybrid Pong agents.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 verification
// failure, 3 run failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qpong/backbone.h"
#include "qpong/error.h"
#include "qpong/experiment.h"
#include "qpong/verify.h"

namespace {

namespace fs = std::filesystem;
using namespace qpong;

enum ExitCode { kOk = 0, kUsage = 1, kVerifyFailed = 2, kRunFailed = 3 };

std::optional<fs::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

void echo_matrix(const experiment::ExperimentConfig& config, const fs::path& out) {
  std::cerr << "experiment '" << config.name << "' -> " << out.string() << '\n';
  for (const auto& b : config.configs) {
    std::cerr << "  " << b.slug() << ": " << backbone::parameter_count(b) << " parameters x "
              << config.seeds.size() << " seeds\n";
  }
}

int cmd_train(const std::string& config_path, const std::string& filter, int jobs, bool force,
              const std::string& out) {
  const auto config = experiment::ExperimentConfig::load(config_path);
  experiment::RunOptions options;
  if (!filter.empty()) options.filter = filter;
  options.jobs = jobs;
  options.force = force;
  options.output_dir = experiment::resolve_output_dir(&config, optional_path(out));
  options.progress = &std::cerr;
  echo_matrix(config, options.output_dir);
  const auto summary = experiment::run_experiment(config, options);
  std::cout << "selected " << summary.selected << ", trained " << summary.executed
            << ", already complete " << summary.skipped << ", failed " << summary.failed << '\n';
  return summary.failed > 0 ? kRunFailed : kOk;
}

int cmd_analyze(const std::string& config_path, const std::string& out, bool cka) {
  std::optional<experiment::ExperimentConfig> config;
  if (!config_path.empty()) config = experiment::ExperimentConfig::load(config_path);
  const fs::path dir =
      experiment::resolve_output_dir(config ? &*config : nullptr, optional_path(out));
  experiment::AnalyzeOptions options;
  options.cka = cka;
  options.progress = &std::cerr;
  const auto result = experiment::analyze_experiment(dir, options);
  std::cout << result.rows.size() << " configurations summarized in "
            << (dir / "analysis" / "summary.csv").string() << '\n';
  for (const auto& s : result.skipped) std::cerr << "skipped " << s << '\n';
  return kOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed) {
  verify::VerifyOptions options;
  options.seed = seed;
  if (!suite.empty()) options.only = suite;
  const auto report = verify::run_verification(options);
  std::cout << report.to_text();
  return report.passed() ? kOk : kVerifyFailed;
}

int cmd_replay(const std::string& file, const std::string& cell, const std::string& config_path,
               const std::string& out, int every, int limit) {
  std::optional<experiment::ExperimentConfig> config;
  if (!config_path.empty()) config = experiment::ExperimentConfig::load(config_path);
  fs::path path;
  if (!file.empty()) {
    path = file;
  } else if (!cell.empty()) {
    const fs::path dir =
        experiment::resolve_output_dir(config ? &*config : nullptr, optional_path(out));
    path = dir / cell / "trajectory.jsonl";
  } else {
    throw UsageError("replay needs a trajectory file or --cell <slug>/<seed>");
  }
  std::ifstream in(path);
  if (!in) {
    throw UsageError("cannot open trajectory " + path.string() +
                     " (train with dump_trajectory = true)");
  }
  const auto physics = config ? config->environment : env::PongPhysics{};
  const int frames = experiment::replay_trajectory(in, std::cout, physics, every, limit);
  std::cerr << frames << " frames\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid quantum-classical PPO agents on Pong"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qpong::experiment::engine_version());

  std::string config_path, filter, out, suite, file, cell;
  int jobs = 1;
  int every = 1;
  int limit = 0;
  bool force = false;
  bool no_cka = false;
  std::uint64_t verify_seed = 7;
  const std::string out_help = "Output root (default: config output_dir, then $QPONG_OUT, then ./runs)";

  auto* train = app.add_subcommand("train", "Train every incomplete (config, seed) cell");
  train->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  train->add_option("--filter", filter, "Regex selecting cells by '<slug>/<seed>'");
  train->add_option("--jobs", jobs, "Cells trained in parallel")->check(CLI::PositiveNumber);
  train->add_flag("--force", force, "Retrain cells that are already complete");
  train->add_option("--out", out, out_help);

  auto* analyze = app.add_subcommand("analyze", "Summaries, curves and CKA over completed runs");
  analyze->add_option("--config", config_path, "Experiment config file (for its output_dir)")
      ->check(CLI::ExistingFile);
  analyze->add_option("--out", out, out_help);
  analyze->add_flag("--no-cka", no_cka, "Skip the representation-similarity matrix");

  auto* verify = app.add_subcommand("verify", "Run the built-in invariant suites");
  verify->add_option("--suite", suite, "Run a single suite");
  verify->add_option("--seed", verify_seed, "Seed for the randomized checks");

  auto* replay = app.add_subcommand("replay", "Render a stored trajectory as text frames");
  replay->add_option("trajectory", file, "trajectory.jsonl file");
  replay->add_option("--cell", cell, "Cell '<slug>/<seed>' under the output root");
  replay->add_option("--config", config_path, "Experiment config (physics and output_dir)")
      ->check(CLI::ExistingFile);
  replay->add_option("--out", out, out_help);
  replay->add_option("--every", every, "Render every n-th step")->check(CLI::PositiveNumber);
  replay->add_option("--limit", limit, "Maximum number of frames (0: all)")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(config_path, filter, jobs, force, out);
    if (*analyze) return cmd_analyze(config_path, out, !no_cka);
    if (*verify) return cmd_verify(suite, verify_seed);
    if (*replay) return cmd_replay(file, cell, config_path, out, every, limit);
  } catch (const qpong::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const qpong::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRunFailed;
  }
  return kUsage;
}
