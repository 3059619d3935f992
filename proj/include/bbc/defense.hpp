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

#include <vector>

#include "bbc/model.hpp"
#include "bbc/sampler.hpp"

namespace bbc {

// What the appended head sees: the victim's logits (keeps the victim a pure
// black box) or its last hidden activations.
enum class SkipInput { kVictimLogits, kLatentFeatures };

// Two affine layers with a nonlinearity between, added on top of the frozen
// victim through a skip connection. Hidden width equals the logit width; in
// the default skip mode input and output width equal the class count.
struct AppendedHead {
  ParameterSet params;  // W1, b1, W2, b2
  Activation hidden_act = Activation::kTanh;

  Eigen::Index input_width() const { return params.tensors[0].dim(1); }
  Eigen::Index output_width() const { return params.tensors[2].dim(0); }
};

// First layer drawn from N(0, 0.01^2), final layer zero: the wrapped model
// starts exactly at the victim.
AppendedHead init_head(Eigen::Index input_width, Eigen::Index num_classes,
                       RngStream& rng);

// The defended model: a frozen victim plus N appended heads.
struct BbcEnsemble {
  VictimClassifier victim;
  std::vector<AppendedHead> heads;
  SkipInput skip_input = SkipInput::kVictimLogits;

  std::size_t head_count() const { return heads.size(); }
  Eigen::Index head_input_width() const;
  void validate() const;
};

BbcEnsemble make_ensemble(VictimClassifier victim, std::size_t n_heads,
                          std::uint64_t seed,
                          SkipInput skip = SkipInput::kVictimLogits);

// Victim plus one head as a LogitModel; this is what samplers and attacks
// differentiate through.
class WrappedHead : public LogitModel {
 public:
  WrappedHead(const BbcEnsemble& ens, std::size_t head_index);

  Eigen::Index input_dim() const override { return ens_->victim.input_dim(); }
  Eigen::Index num_classes() const override {
    return ens_->victim.num_classes();
  }
  Tensor logits(const Tensor& x) const override;
  GradTape::NodeId tape_logits(GradTape& tape,
                               GradTape::NodeId x) const override;

  // Same map with the head parameters placed on the tape as tracked leaves;
  // their node ids are written to head_params.
  GradTape::NodeId tape_logits_tracked(GradTape& tape, GradTape::NodeId x,
                                       TapeParams& head_params) const;

  // Variant reusing parameter leaves already on the tape (for objectives
  // with several forward passes of the same head).
  GradTape::NodeId tape_logits_with(GradTape& tape, GradTape::NodeId x,
                                    const TapeParams& head_params) const;

 private:
  const BbcEnsemble* ens_;
  std::size_t index_;
};

Tensor wrapped_logits(const BbcEnsemble& ens, std::size_t head_index,
                      const Tensor& x);

// --- Stochastic gradients of the head posterior ---------------------------
//
// The three pieces are exposed in the orientation their defining expressions
// are written in: grad_h1 is the gradient of the cross-entropy loss, while
// grad_h2 and grad_h3 are ascent directions of the respective log densities.
// The training loop assembles them into one descent direction.

// d mean-CE(wrapped(x), y) / d theta' over a labeled batch.
std::vector<Tensor> grad_h1(const BbcEnsemble& ens, std::size_t head,
                            const LabeledData& batch);

// d [ mean U(wrapped(pos)) - mean U(wrapped(neg)) ] / d theta'.
std::vector<Tensor> grad_h2(const BbcEnsemble& ens, std::size_t head,
                            const Tensor& pos, const Tensor& neg,
                            EnergyConvention convention);

// d wrapped(x_adv)[y] / d theta'; the distance term carries no theta'
// dependence, so lambda never enters.
std::vector<Tensor> grad_h3(const BbcEnsemble& ens, std::size_t head,
                            const Tensor& x, const Tensor& x_adv, int y);

// Batch form: mean over rows of d wrapped(x_adv_i)[y_i] / d theta'.
std::vector<Tensor> grad_h3_batch(const BbcEnsemble& ens, std::size_t head,
                                  const Tensor& x_adv,
                                  const std::vector<int>& labels);

struct BbcTrainConfig {
  int iterations = 300;  // N_tra
  double lambda = 1.0;
  int batch_pos = 32;  // L1
  int batch_neg = 32;  // L2
  SgldConfig sgld_data;  // M1 negative-phase chain
  SgldConfig sgld_adv;   // M2 adversarial chain
  AdaHmcState hmc;       // per-head sampler state template
  EnergyConvention energy = EnergyConvention::kMeanLogit;
  double reinit_prob = 0.05;
  Eigen::Index buffer_capacity = 128;
  // Initial adversarial perturbation as a fraction of the data range.
  double init_perturb_fraction = 0.05;
  // The sampler consumes the gradient of the full-data log joint; batch
  // means are scaled by this factor (0 = dataset size).
  double likelihood_scale = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Alternating-sampling training of the appended heads; the victim stays
// bit-identical (checksum-checked). Heads run in sequence inside each
// iteration, each on its own RNG streams and replay buffer.
void train(BbcEnsemble& ens, const LabeledData& data,
           const BbcTrainConfig& cfg, const DistanceFn& distance);

// Bayesian model averaging: mean over heads of softmax(wrapped logits).
// The running mean keeps "identical heads" bit-identical to one head.
Tensor predict_bma(const BbcEnsemble& ens, const Tensor& x);

// Predicted class per row under predict_bma.
std::vector<int> predict_labels(const BbcEnsemble& ens, const Tensor& x);

double bma_accuracy(const BbcEnsemble& ens, const LabeledData& data);

// Mean over heads of d CE(wrapped(x), y) / d x for one sample.
Tensor expected_input_gradient(const BbcEnsemble& ens, const Tensor& x, int y);

}  // namespace bbc
