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

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bbc/attack.hpp"
#include "bbc/dataset.hpp"
#include "bbc/detect.hpp"

namespace bbc {

// Sectioned key/value configuration ([section] headers, '#' comments).
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::string require_string(const std::string& section,
                             const std::string& key) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;

  void set(const std::string& section, const std::string& key,
           const std::string& value);
  // "section.key=value" (CLI override form).
  void set_entry(const std::string& entry);

  std::vector<std::string> sections_with_prefix(const std::string& prefix) const;

  // FNV-1a over the canonical (sorted) serialization.
  std::uint64_t hash() const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

// A fully resolved experiment: dataset, victim, defense, attacks, variants.
struct ExperimentSpec {
  std::uint64_t seed = 42;
  std::string output_dir = "out";
  EnergyConvention energy = EnergyConvention::kMeanLogit;

  DatasetKind dataset_kind = DatasetKind::kMoons2d;
  DataGenParams dataset_params;
  std::uint64_t dataset_seed = 1;
  std::string dataset_file;  // load instead of generating when set

  std::vector<LayerSpec> victim_arch_hidden;  // filled against data dims later
  std::vector<Eigen::Index> victim_hidden;
  Activation victim_activation = Activation::kRelu;
  TrainConfig victim_train;
  SgldConfig victim_jem_sampler;

  std::size_t n_heads = 5;
  BbcTrainConfig bbc;
  DistanceKind distance = DistanceKind::kEuclideanSq;
  SkipInput skip_input = SkipInput::kVictimLogits;

  struct NamedThreat {
    std::string name;
    AttackKind kind;
    ThreatModel tm;
  };
  std::vector<NamedThreat> threats;

  DetectorConfig detector;
  Eigen::Index gradstat_samples = 500;

  std::uint64_t config_hash = 0;
};

// Reads the spec from a config; BBC_SEED in the environment overrides the
// root seed.
ExperimentSpec load_experiment_spec(const Config& cfg);

}  // namespace bbc
