// Copyright 2026 The BBC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "bbc/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bbc/rng.hpp"

namespace bbc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw ConfigError("unterminated section at line " +
                          std::to_string(lineno));
      }
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) {
        throw ConfigError("empty section name at line " +
                          std::to_string(lineno));
      }
      cfg.sections_[section];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key = value at line " +
                        std::to_string(lineno));
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("empty key at line " + std::to_string(lineno));
    }
    cfg.sections_[section][key] = trim(t.substr(eq + 1));
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str());
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string Config::get_string(const std::string& section,
                               const std::string& key,
                               const std::string& fallback) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  const auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

std::string Config::require_string(const std::string& section,
                                   const std::string& key) const {
  if (!has(section, key)) {
    throw ConfigError("missing config entry " + section + "." + key);
  }
  return get_string(section, key, "");
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key, "");
  double out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("not a number: " + section + "." + key + " = " + v);
  }
  return out;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::int64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key, "");
  std::int64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("not an integer: " + section + "." + key + " = " + v);
  }
  return out;
}

std::uint64_t Config::get_u64(const std::string& section,
                              const std::string& key,
                              std::uint64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key, "");
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("not an unsigned integer: " + section + "." + key);
  }
  return out;
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = get_string(section, key, "");
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("not a boolean: " + section + "." + key + " = " + v);
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
  sections_[section][key] = value;
}

void Config::set_entry(const std::string& entry) {
  const auto eq = entry.find('=');
  const auto dot = entry.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override must look like section.key=value: " + entry);
  }
  set(trim(entry.substr(0, dot)), trim(entry.substr(dot + 1, eq - dot - 1)),
      trim(entry.substr(eq + 1)));
}

std::vector<std::string> Config::sections_with_prefix(
    const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, _] : sections_) {
    if (name.starts_with(prefix)) out.push_back(name);
  }
  return out;
}

std::uint64_t Config::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [section, entries] : sections_) {
    for (const auto& [key, value] : entries) {
      const std::string line = section + "." + key + "=" + value + "\n";
      h = fnv1a64(line.data(), line.size(), h);
    }
  }
  return h;
}

namespace {

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation: " + s);
}

EnergyConvention energy_from_string(const std::string& s) {
  if (s == "mean") return EnergyConvention::kMeanLogit;
  if (s == "logsumexp") return EnergyConvention::kLogSumExp;
  throw ConfigError("unknown energy convention: " + s);
}

std::vector<Eigen::Index> parse_widths(const std::string& s) {
  std::vector<Eigen::Index> out;
  std::istringstream in(s);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    out.push_back(static_cast<Eigen::Index>(std::stoll(cell)));
  }
  if (out.empty()) throw ConfigError("empty hidden widths");
  return out;
}

ThreatModel threat_from(const Config& cfg, const std::string& section) {
  ThreatModel tm;
  tm.norm = attack_norm_from_string(cfg.get_string(section, "norm", "linf"));
  tm.epsilon = cfg.get_double(section, "epsilon", 0.15);
  tm.step = cfg.get_double(section, "step", tm.epsilon / 8.0);
  tm.iterations = static_cast<int>(cfg.get_int(section, "iterations", 20));
  tm.eot_samples = static_cast<int>(cfg.get_int(section, "eot_samples", 1));
  tm.eot_noise_std = cfg.get_double(section, "eot_noise_std", 0.0);
  tm.random_start = cfg.get_bool(section, "random_start", false);
  return tm;
}

}  // namespace

ExperimentSpec load_experiment_spec(const Config& cfg) {
  ExperimentSpec spec;
  spec.seed = cfg.get_u64("experiment", "seed", 42);
  if (const char* env = std::getenv("BBC_SEED")) {
    spec.seed = std::strtoull(env, nullptr, 10);
  }
  spec.output_dir = cfg.get_string("experiment", "output_dir", "out");
  spec.energy =
      energy_from_string(cfg.get_string("experiment", "energy", "mean"));

  spec.dataset_kind =
      dataset_kind_from_string(cfg.get_string("dataset", "kind", "moons2d"));
  spec.dataset_params.n = cfg.get_int("dataset", "n", 500);
  spec.dataset_params.noise = cfg.get_double("dataset", "noise", 0.1);
  spec.dataset_params.separation =
      cfg.get_double("dataset", "separation", 0.5);
  spec.dataset_params.classes =
      static_cast<int>(cfg.get_int("dataset", "classes", 2));
  spec.dataset_params.frames = cfg.get_int("dataset", "frames", 20);
  spec.dataset_params.joints = cfg.get_int("dataset", "joints", 5);
  spec.dataset_seed = cfg.get_u64("dataset", "seed", 1);
  spec.dataset_file = cfg.get_string("dataset", "file", "");

  spec.victim_hidden =
      parse_widths(cfg.get_string("victim", "hidden", "32,32"));
  spec.victim_activation =
      activation_from_string(cfg.get_string("victim", "activation", "relu"));
  spec.victim_train.mode =
      cfg.get_string("victim", "mode", "standard") == "jem"
          ? TrainMode::kEnergyJoint
          : TrainMode::kStandard;
  spec.victim_train.epochs =
      static_cast<int>(cfg.get_int("victim", "epochs", 200));
  spec.victim_train.batch_size =
      static_cast<int>(cfg.get_int("victim", "batch_size", 32));
  spec.victim_train.learning_rate =
      cfg.get_double("victim", "learning_rate", 0.2);
  spec.victim_train.seed = cfg.get_u64("victim", "seed", spec.seed);
  spec.victim_train.energy = spec.energy;
  spec.victim_jem_sampler.steps =
      static_cast<int>(cfg.get_int("victim", "jem_sgld_steps", 20));
  spec.victim_jem_sampler.step_size =
      cfg.get_double("victim", "jem_sgld_step_size", 0.05);
  spec.victim_jem_sampler.clip_to_box = true;

  spec.n_heads = static_cast<std::size_t>(cfg.get_int("bbc", "heads", 5));
  spec.bbc.iterations =
      static_cast<int>(cfg.get_int("bbc", "iterations", 300));
  spec.bbc.lambda = cfg.get_double("bbc", "lambda", 1.0);
  spec.bbc.batch_pos = static_cast<int>(cfg.get_int("bbc", "batch_pos", 32));
  spec.bbc.batch_neg = static_cast<int>(cfg.get_int("bbc", "batch_neg", 32));
  spec.bbc.sgld_data.steps =
      static_cast<int>(cfg.get_int("bbc", "sgld_data_steps", 20));
  spec.bbc.sgld_data.step_size =
      cfg.get_double("bbc", "sgld_data_step_size", 0.05);
  spec.bbc.sgld_adv.steps =
      static_cast<int>(cfg.get_int("bbc", "sgld_adv_steps", 10));
  spec.bbc.sgld_adv.step_size =
      cfg.get_double("bbc", "sgld_adv_step_size", 0.05);
  spec.bbc.init_perturb_fraction =
      cfg.get_double("bbc", "init_perturb", 0.05);
  spec.bbc.hmc.sigma = cfg.get_double("bbc", "hmc_sigma", 0.05);
  spec.bbc.hmc.friction = cfg.get_double("bbc", "hmc_friction", 1.0);
  spec.bbc.hmc.tau = cfg.get_double("bbc", "hmc_tau", 1000.0);
  spec.bbc.hmc.inner_steps =
      static_cast<int>(cfg.get_int("bbc", "hmc_inner_steps", 1));
  spec.bbc.reinit_prob = cfg.get_double("bbc", "rho", 0.05);
  spec.bbc.buffer_capacity = cfg.get_int("bbc", "buffer_capacity", 128);
  spec.bbc.energy = spec.energy;
  spec.bbc.seed = cfg.get_u64("bbc", "seed", spec.seed);

  const std::string dist = cfg.get_string("bbc", "distance", "euclidean_sq");
  if (dist == "euclidean_sq") {
    spec.distance = DistanceKind::kEuclideanSq;
  } else if (dist == "perceptual") {
    spec.distance = DistanceKind::kPerceptual;
  } else if (dist == "motion_manifold") {
    spec.distance = DistanceKind::kMotionManifold;
  } else {
    throw ConfigError("unknown distance: " + dist);
  }
  spec.skip_input = cfg.get_string("bbc", "skip_input", "logits") == "latent"
                        ? SkipInput::kLatentFeatures
                        : SkipInput::kVictimLogits;

  for (const std::string& section : cfg.sections_with_prefix("attack.")) {
    ExperimentSpec::NamedThreat t;
    t.name = section.substr(std::string("attack.").size());
    t.kind = attack_kind_from_string(cfg.require_string(section, "kind"));
    t.tm = threat_from(cfg, section);
    t.tm.seed = cfg.get_u64(section, "seed", spec.seed);
    spec.threats.push_back(std::move(t));
  }

  spec.detector.noise_std = cfg.get_double("detector", "noise_std", 0.05);
  spec.detector.draws =
      static_cast<int>(cfg.get_int("detector", "draws", 16));
  spec.detector.threshold = cfg.get_double("detector", "threshold", 0.0);
  spec.detector.seed = cfg.get_u64("detector", "seed", spec.seed);

  spec.gradstat_samples = cfg.get_int("gradstats", "samples", 500);
  spec.config_hash = cfg.hash();
  return spec;
}

}  // namespace bbc
