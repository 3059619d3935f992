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

#include <map>

#include "bbc/checkpoint.hpp"
#include "bbc/config.hpp"
#include "bbc/detect.hpp"

namespace bbc {

// Dataset resolved from the spec (generated or loaded from file).
Dataset spec_dataset(const ExperimentSpec& spec);

// Victim architecture for the given data dimensions.
std::vector<LayerSpec> build_arch(const std::vector<Eigen::Index>& hidden,
                                  Activation act, Eigen::Index input_dim,
                                  Eigen::Index num_classes);

// Victim trained per the spec (standard or energy-joint), unfrozen.
VictimClassifier train_spec_victim(const ExperimentSpec& spec,
                                   const LabeledData& data);

// Distance function resolved from the spec. The perceptual mode trains a
// small feature net on the dataset and freezes it; motion mode requires a
// motion dataset.
DistanceFn build_distance(const ExperimentSpec& spec, const Dataset& ds);

struct ExperimentReport {
  std::map<std::string, double> metrics;  // insertion-order via name sort
  std::string metrics_path;
  std::string attacks_path;
  std::string gradstats_path;
  std::string manifest_path;
};

// Full pipeline: data -> victim -> defended ensemble -> attack evaluation.
// Writes metrics.csv, attacks.csv, gradstats.csv, victim/ensemble
// checkpoints and a manifest into spec.output_dir. Byte-identical outputs
// for identical specs; wall-clock timestamps live only in the manifest.
ExperimentReport run_experiment(const ExperimentSpec& spec);

struct DetectionReport {
  RocMetrics metrics;
  std::string report_path;
  std::string summary_path;
};

// Clean-vs-attacked detection sweep on a trained ensemble; writes
// detect.csv (sample_id, is_adversarial_truth, score, flagged) and a
// summary with TPR/FPR/AUROC.
DetectionReport run_detection(const ExperimentSpec& spec,
                              const BbcEnsemble& ens, const Dataset& ds,
                              const std::string& out_dir);

// Expected-gradient percentile rows for head counts 1..N; written by
// run_experiment and the grad-stats command.
void write_gradstats(const ExperimentSpec& spec, const BbcEnsemble& ens,
                     const Dataset& ds, const std::string& path);

}  // namespace bbc
