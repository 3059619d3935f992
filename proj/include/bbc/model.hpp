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

#include "bbc/data.hpp"
#include "bbc/energy.hpp"
#include "bbc/net.hpp"
#include "bbc/sampler.hpp"

namespace bbc {

enum class TrainMode { kStandard, kEnergyJoint };

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kStandard;
  // Energy-joint pretraining only.
  EnergyConvention energy = EnergyConvention::kMeanLogit;
  double divergence_limit = 1e6;

  void validate() const;
};

// A pre-trained classifier. Once frozen its parameters are immutable and a
// checksum taken at freeze time pins them; everything downstream treats the
// victim as a black box behind logits().
class VictimClassifier : public LogitModel {
 public:
  VictimClassifier() = default;
  VictimClassifier(std::vector<LayerSpec> arch, ParameterSet params,
                   bool frozen = false);

  Eigen::Index input_dim() const override { return arch_.front().in; }
  Eigen::Index num_classes() const override { return arch_.back().out; }
  const std::vector<LayerSpec>& arch() const { return arch_; }
  const ParameterSet& params() const { return params_; }

  bool frozen() const { return frozen_; }
  // Checksum stored at freeze time.
  std::uint64_t checksum() const;
  // Checksum of the parameters as they are now.
  std::uint64_t current_checksum() const { return params_checksum(params_); }

  Tensor logits(const Tensor& x) const override;
  GradTape::NodeId tape_logits(GradTape& tape,
                               GradTape::NodeId x) const override;

  // Output of the last hidden layer (the skip connection's alternative tap).
  GradTape::NodeId tape_latent(GradTape& tape, GradTape::NodeId x) const;
  Eigen::Index latent_dim() const;

  // Throws ContractError when frozen.
  void set_params(ParameterSet params);

  // Marks the model immutable and stores the checksum. Idempotent.
  void freeze();

 private:
  std::vector<LayerSpec> arch_;
  ParameterSet params_;
  bool frozen_ = false;
  std::uint64_t checksum_ = 0;
};

VictimClassifier train_standard(const LabeledData& data, const TrainConfig& cfg,
                                const std::vector<LayerSpec>& arch);

// Energy-based joint pretraining: cross-entropy minus the contrastive
// positive-minus-negative U term, with negatives drawn by persistent
// Langevin chains. Aborts with NumericError if |U| exceeds the divergence
// limit.
VictimClassifier pretrain_energy_joint(const LabeledData& data,
                                       const TrainConfig& cfg,
                                       const SgldConfig& sampler,
                                       const std::vector<LayerSpec>& arch);

VictimClassifier train_victim(const LabeledData& data, const TrainConfig& cfg,
                              const SgldConfig& sampler,
                              const std::vector<LayerSpec>& arch);

// freeze() as a free operation; returns the same model frozen.
VictimClassifier freeze(VictimClassifier model);

// Fraction of samples whose argmax logit matches the label.
double accuracy(const LogitModel& model, const LabeledData& data);

}  // namespace bbc
