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

#include "qpong/experiment.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include "qpong/error.h"
#include "qpong/run_io.h"

#ifndef QPONG_VERSION
#define QPONG_VERSION "0.0.0"
#endif

namespace qpong::experiment {
namespace fs = std::filesystem;
using boost::property_tree::ptree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"experiment", {"name", "output_dir", "dump_trajectory"}},
      {"environment",
       {"paddle_half_height", "paddle_speed", "ball_speed", "speedup", "max_ball_speed",
        "deflection", "opponent_speed", "opponent_dead_zone", "max_serve_angle", "winning_score",
        "step_cap"}},
      {"backbone", {"topology", "init_seed_policy", "init_seed"}},
      {"ppo",
       {"gamma", "gae_lambda", "clip_coef", "vf_coef", "ent_coef", "learning_rate",
        "adam_epsilon", "num_envs", "num_steps", "update_epochs", "num_minibatches",
        "total_timesteps", "max_grad_norm", "norm_adv", "clip_vloss"}},
      {"matrix", {"configs", "seeds"}},
  };
  return keys;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Drops "; ..." and "# ..." trailing a value when preceded by whitespace.
std::string strip_inline_comments(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    for (std::size_t i = 1; i < line.size(); ++i) {
      if ((line[i] == ';' || line[i] == '#') && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line.erase(i);
        break;
      }
    }
    out << line << '\n';
  }
  return out.str();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string token;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!token.empty()) out.push_back(token);
      token.clear();
    } else {
      token.push_back(c);
    }
  }
  if (!token.empty()) out.push_back(token);
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("invalid value '" + text + "' for " + key);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("invalid boolean '" + text + "' for " + key);
}

std::string fmt(double v) { return analysis::format_double(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

std::string backbone_spec(const backbone::BackboneConfig& c) {
  return std::string(backbone::to_string(c.kind)) + ":" +
         std::to_string(c.is_quantum() ? c.num_layers : c.hidden_dim);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << v;
  return out.str();
}

std::uint64_t parse_hex(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("bad hash '" + s + "'");
  return v;
}

void write_atomically(const fs::path& path, const std::string& contents) {
  static std::atomic<unsigned> counter{0};
  const fs::path tmp = path.string() + ".tmp" + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw ConfigError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

nlohmann::ordered_json to_json(const ManifestEntry& e) {
  nlohmann::ordered_json j;
  j["slug"] = e.slug;
  j["seed"] = e.seed;
  j["config_hash"] = hex(e.config_hash);
  j["status"] = e.status;
  j["log"] = e.log;
  j["checkpoint"] = e.checkpoint;
  j["fragment"] = e.fragment;
  if (!e.trajectory.empty()) j["trajectory"] = e.trajectory;
  if (!e.error_log.empty()) j["error_log"] = e.error_log;
  if (!e.error.empty()) j["error"] = e.error;
  j["wall_clock_seconds"] = e.wall_clock_seconds;
  j["engine_version"] = e.engine_version;
  return j;
}

ManifestEntry entry_from_json(const nlohmann::json& j) {
  ManifestEntry e;
  e.slug = j.at("slug").get<std::string>();
  e.seed = j.at("seed").get<std::uint64_t>();
  e.config_hash = parse_hex(j.at("config_hash").get<std::string>());
  e.status = j.at("status").get<std::string>();
  e.log = j.value("log", "");
  e.checkpoint = j.value("checkpoint", "");
  e.fragment = j.value("fragment", "");
  e.trajectory = j.value("trajectory", "");
  e.error_log = j.value("error_log", "");
  e.error = j.value("error", "");
  e.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
  e.engine_version = j.value("engine_version", "");
  return e;
}

int kind_rank(backbone::BackboneKind kind) {
  switch (kind) {
    case backbone::BackboneKind::kSeparable:
      return 0;
    case backbone::BackboneKind::kCZEntangled:
      return 1;
    case backbone::BackboneKind::kIsingZZEntangled:
      return 2;
    case backbone::BackboneKind::kClassicalMLP:
      return 3;
  }
  return 4;
}

}  // namespace

std::string engine_version() { return QPONG_VERSION; }

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ptree tree;
  try {
    std::istringstream in(strip_inline_comments(text));
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }

  ExperimentConfig c;
  bool saw_configs = false;
  bool saw_seeds = false;
  for (const auto& [section, body] : tree) {
    const auto known = known_keys().find(section);
    if (known == known_keys().end()) {
      throw ConfigError(body.empty() ? "config key '" + section + "' must be inside a section"
                                     : "unknown config section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      if (!known->second.contains(key)) {
        throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
      }
      const std::string value = trim(node.data());
      const std::string name = section + "." + key;
      if (section == "experiment") {
        if (key == "name") c.name = value;
        if (key == "output_dir") c.output_dir = value;
        if (key == "dump_trajectory") c.dump_trajectory = parse_bool(name, value);
      } else if (section == "environment") {
        auto& e = c.environment;
        if (key == "paddle_half_height") e.paddle_half_height = parse_number<double>(name, value);
        if (key == "paddle_speed") e.paddle_speed = parse_number<double>(name, value);
        if (key == "ball_speed") e.ball_speed = parse_number<double>(name, value);
        if (key == "speedup") e.speedup = parse_number<double>(name, value);
        if (key == "max_ball_speed") e.max_ball_speed = parse_number<double>(name, value);
        if (key == "deflection") e.deflection = parse_number<double>(name, value);
        if (key == "opponent_speed") e.opponent_speed = parse_number<double>(name, value);
        if (key == "opponent_dead_zone") e.opponent_dead_zone = parse_number<double>(name, value);
        if (key == "max_serve_angle") e.max_serve_angle = parse_number<double>(name, value);
        if (key == "winning_score") e.winning_score = parse_number<int>(name, value);
        if (key == "step_cap") e.step_cap = parse_number<int>(name, value);
      } else if (section == "backbone") {
        if (key == "topology") c.backbone.topology = backbone::parse_topology(value);
        if (key == "init_seed_policy") {
          if (value == "run-seed") {
            c.backbone.init_seed_policy = InitSeedPolicy::kRunSeed;
          } else if (value == "fixed") {
            c.backbone.init_seed_policy = InitSeedPolicy::kFixed;
          } else {
            throw ConfigError("init_seed_policy must be run-seed or fixed");
          }
        }
        if (key == "init_seed") c.backbone.init_seed = parse_number<std::uint64_t>(name, value);
      } else if (section == "ppo") {
        auto& p = c.ppo;
        if (key == "gamma") p.gamma = parse_number<double>(name, value);
        if (key == "gae_lambda") p.gae_lambda = parse_number<double>(name, value);
        if (key == "clip_coef") p.clip_coef = parse_number<double>(name, value);
        if (key == "vf_coef") p.vf_coef = parse_number<double>(name, value);
        if (key == "ent_coef") p.ent_coef = parse_number<double>(name, value);
        if (key == "learning_rate") p.learning_rate = parse_number<double>(name, value);
        if (key == "adam_epsilon") p.adam_epsilon = parse_number<double>(name, value);
        if (key == "num_envs") p.num_envs = parse_number<int>(name, value);
        if (key == "num_steps") p.num_steps = parse_number<int>(name, value);
        if (key == "update_epochs") p.update_epochs = parse_number<int>(name, value);
        if (key == "num_minibatches") p.num_minibatches = parse_number<int>(name, value);
        if (key == "total_timesteps") p.total_timesteps = parse_number<std::int64_t>(name, value);
        if (key == "max_grad_norm") p.max_grad_norm = parse_number<double>(name, value);
        if (key == "norm_adv") p.norm_adv = parse_bool(name, value);
        if (key == "clip_vloss") p.clip_vloss = parse_bool(name, value);
      } else if (section == "matrix") {
        if (key == "configs") {
          saw_configs = true;
          for (const auto& spec : split_list(value)) {
            c.configs.push_back(backbone::parse_backbone_spec(spec));
          }
        }
        if (key == "seeds") {
          saw_seeds = true;
          for (const auto& s : split_list(value)) {
            c.seeds.push_back(parse_number<std::uint64_t>(name, s));
          }
        }
      }
    }
  }
  if (!saw_configs || !saw_seeds) throw ConfigError("[matrix] needs both configs and seeds");
  for (auto& b : c.configs) b.topology = c.backbone.topology;
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream out;
  out << "[experiment]\n"
      << "name = " << name << "\n"
      << "output_dir = " << output_dir << "\n"
      << "dump_trajectory = " << fmt(dump_trajectory) << "\n\n";
  const auto& e = environment;
  out << "[environment]\n"
      << "paddle_half_height = " << fmt(e.paddle_half_height) << "\n"
      << "paddle_speed = " << fmt(e.paddle_speed) << "\n"
      << "ball_speed = " << fmt(e.ball_speed) << "\n"
      << "speedup = " << fmt(e.speedup) << "\n"
      << "max_ball_speed = " << fmt(e.max_ball_speed) << "\n"
      << "deflection = " << fmt(e.deflection) << "\n"
      << "opponent_speed = " << fmt(e.opponent_speed) << "\n"
      << "opponent_dead_zone = " << fmt(e.opponent_dead_zone) << "\n"
      << "max_serve_angle = " << fmt(e.max_serve_angle) << "\n"
      << "winning_score = " << e.winning_score << "\n"
      << "step_cap = " << e.step_cap << "\n\n";
  out << "[backbone]\n"
      << "topology = " << backbone::to_string(backbone.topology) << "\n"
      << "init_seed_policy = "
      << (backbone.init_seed_policy == InitSeedPolicy::kRunSeed ? "run-seed" : "fixed") << "\n"
      << "init_seed = " << backbone.init_seed << "\n\n";
  const auto& p = ppo;
  out << "[ppo]\n"
      << "gamma = " << fmt(p.gamma) << "\n"
      << "gae_lambda = " << fmt(p.gae_lambda) << "\n"
      << "clip_coef = " << fmt(p.clip_coef) << "\n"
      << "vf_coef = " << fmt(p.vf_coef) << "\n"
      << "ent_coef = " << fmt(p.ent_coef) << "\n"
      << "learning_rate = " << fmt(p.learning_rate) << "\n"
      << "adam_epsilon = " << fmt(p.adam_epsilon) << "\n"
      << "num_envs = " << p.num_envs << "\n"
      << "num_steps = " << p.num_steps << "\n"
      << "update_epochs = " << p.update_epochs << "\n"
      << "num_minibatches = " << p.num_minibatches << "\n"
      << "total_timesteps = " << p.total_timesteps << "\n"
      << "max_grad_norm = " << fmt(p.max_grad_norm) << "\n"
      << "norm_adv = " << fmt(p.norm_adv) << "\n"
      << "clip_vloss = " << fmt(p.clip_vloss) << "\n\n";
  out << "[matrix]\nconfigs =";
  for (const auto& b : configs) out << ' ' << backbone_spec(b);
  out << "\nseeds =";
  for (auto s : seeds) out << ' ' << s;
  out << "\n";
  return out.str();
}

void ExperimentConfig::validate() const {
  environment.validate();
  ppo.validate();
  if (configs.empty()) throw ConfigError("[matrix] configs is empty");
  if (seeds.empty()) throw ConfigError("[matrix] seeds is empty");
  std::set<std::string> slugs;
  for (const auto& b : configs) {
    b.validate();
    if (!slugs.insert(b.slug()).second) throw ConfigError("duplicate config " + b.slug());
  }
  std::set<std::uint64_t> unique_seeds(seeds.begin(), seeds.end());
  if (unique_seeds.size() != seeds.size()) throw ConfigError("duplicate seed in [matrix] seeds");
  if (name.empty() || name.find_first_of("/\\\n") != std::string::npos) {
    throw ConfigError("experiment name must be a non-empty single path component");
  }
}

std::vector<Cell> ExperimentConfig::cells() const {
  std::vector<Cell> out;
  for (const auto& b : configs) {
    const std::uint64_t hash = cell_config_hash(*this, b);
    for (auto seed : seeds) {
      Cell cell;
      cell.backbone = b;
      cell.seed = seed;
      cell.init_seed =
          backbone.init_seed_policy == InitSeedPolicy::kRunSeed ? seed : backbone.init_seed;
      cell.slug = b.slug();
      cell.config_hash = hash;
      cell.param_count = backbone::parameter_count(b);
      out.push_back(cell);
    }
  }
  return out;
}

ExperimentConfig ExperimentConfig::for_cell(const Cell& cell) const {
  ExperimentConfig c = *this;
  c.configs = {cell.backbone};
  c.seeds = {cell.seed};
  return c;
}

std::uint64_t cell_config_hash(const ExperimentConfig& config,
                               const backbone::BackboneConfig& backbone) {
  ExperimentConfig canonical = config;
  canonical.name = "cell";
  canonical.output_dir.clear();
  canonical.dump_trajectory = false;
  canonical.configs = {backbone};
  canonical.seeds = {0};
  return fnv1a(canonical.serialize());
}

fs::path resolve_output_dir(const ExperimentConfig* config,
                            const std::optional<fs::path>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (config && !config->output_dir.empty()) return config->output_dir;
  if (const char* env = std::getenv(kOutputEnvVar); env && *env) return env;
  return "runs";
}

std::vector<std::string> ManifestEntry::files() const {
  std::vector<std::string> out;
  for (const auto* s : {&log, &checkpoint, &fragment, &trajectory, &error_log}) {
    if (!s->empty()) out.push_back(*s);
  }
  return out;
}

Manifest Manifest::load(const fs::path& output_dir) {
  Manifest m;
  const fs::path path = output_dir / "manifest.json";
  if (!fs::exists(path)) return m;
  std::ifstream in(path);
  nlohmann::json j;
  try {
    in >> j;
    for (const auto& e : j.at("entries")) m.upsert(entry_from_json(e));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed manifest " + path.string() + ": " + e.what());
  }
  return m;
}

void Manifest::save(const fs::path& output_dir) const {
  nlohmann::ordered_json j;
  j["engine_version"] = engine_version();
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : entries_) j["entries"].push_back(to_json(e));
  fs::create_directories(output_dir);
  write_atomically(output_dir / "manifest.json", j.dump(2) + "\n");
}

const ManifestEntry* Manifest::find(const std::string& slug, std::uint64_t seed) const {
  for (const auto& e : entries_) {
    if (e.slug == slug && e.seed == seed) return &e;
  }
  return nullptr;
}

void Manifest::upsert(ManifestEntry entry) {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const ManifestEntry& e) {
    return e.slug == entry.slug && e.seed == entry.seed;
  });
  if (it != entries_.end()) {
    *it = std::move(entry);
  } else {
    entries_.push_back(std::move(entry));
  }
  std::sort(entries_.begin(), entries_.end(), [](const ManifestEntry& a, const ManifestEntry& b) {
    return std::tie(a.slug, a.seed) < std::tie(b.slug, b.seed);
  });
}

ManifestEntry train_cell(const ExperimentConfig& config, const Cell& cell,
                         const fs::path& output_dir) {
  const fs::path rel = fs::path(cell.slug) / std::to_string(cell.seed);
  const fs::path dir = output_dir / rel;
  fs::create_directories(dir);
  for (const char* stale : {"run.jsonl", "checkpoint.bin", "cell.json", "trajectory.jsonl",
                            "error.txt"}) {
    fs::remove(dir / stale);
  }

  ManifestEntry entry;
  entry.slug = cell.slug;
  entry.seed = cell.seed;
  entry.config_hash = cell.config_hash;
  entry.engine_version = engine_version();
  entry.log = (rel / "run.jsonl").generic_string();
  entry.checkpoint = (rel / "checkpoint.bin").generic_string();
  entry.fragment = (rel / "cell.json").generic_string();

  const auto start = std::chrono::steady_clock::now();
  std::ofstream log(dir / "run.jsonl.tmp", std::ios::binary | std::ios::trunc);
  if (!log) throw ConfigError("cannot write run log in " + dir.string());
  std::ofstream trajectory;
  ppo::TrainOptions options;
  options.init_seed = cell.init_seed;
  options.on_episode = [&](const ppo::EpisodeRecord& ep) { log << ppo::episode_log_line(ep) << '\n'; };
  options.on_update = [&](const ppo::UpdateDiagnostics& u) { log << ppo::update_log_line(u) << '\n'; };
  if (config.dump_trajectory) {
    trajectory.open(dir / "trajectory.jsonl", std::ios::binary | std::ios::trunc);
    options.trajectory = &trajectory;
    entry.trajectory = (rel / "trajectory.jsonl").generic_string();
  }

  const ppo::RunRecord record =
      ppo::train(cell.backbone, config.ppo, config.environment, cell.seed, options);
  log.close();
  if (!log) throw ConfigError("failed writing run log in " + dir.string());
  ppo::write_checkpoint(dir / "checkpoint.bin",
                        {cell.config_hash, record.total_steps, record.final_params,
                         record.rng_states});
  fs::rename(dir / "run.jsonl.tmp", dir / "run.jsonl");
  entry.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  entry.status = "completed";

  nlohmann::ordered_json fragment = to_json(entry);
  fragment["param_count"] = cell.param_count;
  fragment["init_seed"] = cell.init_seed;
  fragment["total_steps"] = record.total_steps;
  fragment["episodes"] = record.episodes.size();
  fragment["config"] = config.for_cell(cell).serialize();
  write_atomically(dir / "cell.json", fragment.dump(2) + "\n");
  return entry;
}

TrainSummary run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const fs::path out_dir = options.output_dir.empty() ? resolve_output_dir(&config, std::nullopt)
                                                      : options.output_dir;
  fs::create_directories(out_dir);
  Manifest manifest = Manifest::load(out_dir);

  std::optional<std::regex> filter;
  if (options.filter) {
    try {
      filter.emplace(*options.filter);
    } catch (const std::regex_error& e) {
      throw ConfigError("invalid --filter regex: " + std::string(e.what()));
    }
  }

  TrainSummary summary;
  std::vector<Cell> todo;
  for (const Cell& cell : config.cells()) {
    if (filter && !std::regex_search(cell.id(), *filter)) continue;
    ++summary.selected;
    const ManifestEntry* existing = manifest.find(cell.slug, cell.seed);
    const bool done = existing && existing->status == "completed" &&
                      existing->config_hash == cell.config_hash &&
                      fs::exists(out_dir / existing->log) &&
                      fs::exists(out_dir / existing->checkpoint);
    if (done && !options.force) {
      ++summary.skipped;
      continue;
    }
    todo.push_back(cell);
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < todo.size(); i = next++) {
      const Cell& cell = todo[i];
      ManifestEntry entry;
      try {
        entry = train_cell(config, cell, out_dir);
      } catch (const std::exception& e) {
        const fs::path rel = fs::path(cell.slug) / std::to_string(cell.seed);
        entry = ManifestEntry{};
        entry.slug = cell.slug;
        entry.seed = cell.seed;
        entry.config_hash = cell.config_hash;
        entry.status = "failed";
        entry.error = e.what();
        entry.engine_version = engine_version();
        std::error_code ec;
        for (const char* partial :
             {"run.jsonl.tmp", "run.jsonl", "checkpoint.bin", "cell.json", "trajectory.jsonl"}) {
          fs::remove(out_dir / rel / partial, ec);
        }
        fs::create_directories(out_dir / rel, ec);
        std::ofstream(out_dir / rel / "error.txt") << cell.id() << ": " << e.what() << '\n';
        entry.error_log = (rel / "error.txt").generic_string();
      }
      std::lock_guard lock(mu);
      if (entry.status == "completed") {
        ++summary.executed;
      } else {
        ++summary.failed;
      }
      if (options.progress) {
        *options.progress << entry.status << ' ' << cell.id();
        if (!entry.error.empty()) *options.progress << ": " << entry.error;
        *options.progress << '\n';
      }
      manifest.upsert(std::move(entry));
      manifest.save(out_dir);
    }
  };

  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(todo.size())));
  std::vector<std::thread> threads;
  for (int j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  manifest.save(out_dir);
  return summary;
}

AnalyzeResult analyze_experiment(const fs::path& output_dir, const AnalyzeOptions& options) {
  const Manifest manifest = Manifest::load(output_dir);
  struct Loaded {
    ManifestEntry entry;
    ExperimentConfig config;
    analysis::RunSeries series;
  };
  std::vector<Loaded> runs;
  for (const auto& e : manifest.entries()) {
    if (e.status != "completed") continue;
    std::ifstream in(output_dir / e.fragment);
    if (!in) throw ConfigError("missing manifest fragment " + e.fragment);
    nlohmann::json fragment;
    in >> fragment;
    Loaded run{e, ExperimentConfig::parse(fragment.at("config").get<std::string>()), {}};
    run.series.episodes = ppo::read_run_log(output_dir / e.log).episodes;
    run.series.total_steps = fragment.at("total_steps").get<std::int64_t>();
    runs.push_back(std::move(run));
  }
  if (runs.empty()) {
    throw UsageError("no completed runs in " + output_dir.string() + "; run 'train' first");
  }

  std::stable_sort(runs.begin(), runs.end(), [](const Loaded& a, const Loaded& b) {
    const auto& ca = a.config.configs.front();
    const auto& cb = b.config.configs.front();
    const int sa = ca.is_quantum() ? ca.num_layers : ca.hidden_dim;
    const int sb = cb.is_quantum() ? cb.num_layers : cb.hidden_dim;
    return std::make_tuple(kind_rank(ca.kind), sa, a.entry.slug, a.entry.seed) <
           std::make_tuple(kind_rank(cb.kind), sb, b.entry.slug, b.entry.seed);
  });

  const fs::path dir = output_dir / "analysis";
  fs::create_directories(dir / "curves");

  AnalyzeResult result;
  std::ostringstream summary;
  std::ostringstream lengths;
  summary << analysis::summary_csv_header() << '\n';
  lengths << analysis::episode_length_csv_header() << '\n';
  for (std::size_t i = 0; i < runs.size();) {
    std::size_t j = i;
    std::vector<analysis::RunSeries> group;
    while (j < runs.size() && runs[j].entry.slug == runs[i].entry.slug) {
      if (runs[j].series.episodes.empty()) {
        result.skipped.push_back(runs[j].entry.slug + "/" + std::to_string(runs[j].entry.seed) +
                                 " (no finished episodes)");
      } else {
        group.push_back(runs[j].series);
      }
      ++j;
    }
    if (!group.empty()) {
      const auto agg =
          analysis::aggregate_runs(runs[i].config.configs.front(), group, options.aggregate);
      summary << analysis::summary_csv_row(agg.row) << '\n';
      lengths << analysis::episode_length_csv_row(agg.row) << '\n';
      write_atomically(dir / "curves" / (agg.row.backbone + ".csv"), analysis::curve_csv(agg.curve));
      result.rows.push_back(agg.row);
    }
    i = j;
  }
  write_atomically(dir / "summary.csv", summary.str());
  write_atomically(dir / "episode_lengths.csv", lengths.str());

  if (options.cka) {
    const fs::path probe_path = dir / "probes.bin";
    analysis::ProbeSet probes;
    if (fs::exists(probe_path)) {
      probes = analysis::read_probe_set(probe_path);
    } else {
      probes = analysis::make_probe_set(runs.front().config.environment, options.probe_count,
                                        options.probe_seed);
      analysis::write_probe_set(probe_path, probes);
    }
    std::vector<analysis::RepresentationMatrix> reps;
    analysis::CkaHeatmap heatmap;
    for (const auto& run : runs) {
      const auto& cfg = run.config.configs.front();
      const backbone::Backbone bb(cfg);
      const auto checkpoint = ppo::read_checkpoint(output_dir / run.entry.checkpoint);
      if (checkpoint.params.size() < bb.num_params()) {
        throw ConfigError("checkpoint " + run.entry.checkpoint + " is too small for " + cfg.slug());
      }
      const std::span<const double> params(checkpoint.params.data(), bb.num_params());
      auto rep = analysis::representations(bb, params, probes);
      const std::string label = run.entry.slug + "/" + std::to_string(run.entry.seed);
      if (analysis::center_columns(rep).norm() <= 1e-12 * std::max(1.0, rep.norm())) {
        result.skipped.push_back(label + " (zero-variance features)");
        continue;
      }
      reps.push_back(std::move(rep));
      heatmap.labels.push_back(label);
      heatmap.groups.push_back(std::string(backbone::to_string(cfg.kind)));
    }
    heatmap.similarity = analysis::cka_matrix(reps);
    result.cka_labels = heatmap.labels;
    write_atomically(dir / "cka.json", analysis::to_json(heatmap) + "\n");
  }
  if (options.progress) {
    *options.progress << "analyzed " << runs.size() << " runs into " << dir.string() << '\n';
  }
  return result;
}

int replay_trajectory(std::istream& in, std::ostream& out, const env::PongPhysics& physics,
                      int every, int limit) {
  if (every <= 0) throw ConfigError("--every must be positive");
  std::string line;
  int step = 0;
  int frames = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("trajectory line " + std::to_string(step + 1) + ": " + e.what());
    }
    const auto obs = j.at("obs").get<env::Observation>();
    if (step % every == 0) {
      out << "step " << step << "  action " << j.at("action").get<int>() << "  reward "
          << j.at("reward").get<double>() << (j.at("done").get<bool>() ? "  done" : "") << '\n';
      out << env::render_frame(obs, physics);
      ++frames;
      if (limit > 0 && frames >= limit) break;
    }
    ++step;
  }
  return frames;
}

}  // namespace qpong::experiment
