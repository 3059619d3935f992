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

#include "bbc/distance.hpp"
#include "bbc/tape.hpp"

namespace bbc {

// Anything that maps inputs to logits and can record that map on a tape.
// Both the frozen victim and a victim-plus-head composite implement this.
class LogitModel {
 public:
  virtual ~LogitModel() = default;

  virtual Eigen::Index input_dim() const = 0;
  virtual Eigen::Index num_classes() const = 0;

  // Logits for [d] or a [n,d] row batch.
  virtual Tensor logits(const Tensor& x) const = 0;

  // Records the logits map on a tape; parameters enter as constants.
  virtual GradTape::NodeId tape_logits(GradTape& tape,
                                       GradTape::NodeId x) const = 0;
};

// The scalar summary U of a logit vector used by the contrastive gradient
// and the negative-phase sampler. kMeanLogit averages the logits; kLogSumExp
// uses the (negated) data energy instead.
enum class EnergyConvention { kMeanLogit, kLogSumExp };

// Per-row U summed over the batch, recorded on a tape; row gradients
// decouple, so one node serves a whole chain batch.
GradTape::NodeId tape_u_sum(GradTape& tape, GradTape::NodeId logits,
                            EnergyConvention convention);

// Mean of per-row U over the batch.
GradTape::NodeId tape_u_mean(GradTape& tape, GradTape::NodeId logits,
                             EnergyConvention convention);

// Energy-based reinterpretation of a classifier: a logits function combined
// with the distance weight lambda and the distance function itself.
struct EnergyView {
  const LogitModel* model = nullptr;
  double lambda = 1.0;
  const DistanceFn* distance = nullptr;

  void validate() const;
};

// E(x) = -logsumexp(logits(x)); low energy marks in-distribution points.
// x is a single sample.
double data_energy(const LogitModel& model, const Tensor& x);

// softmax(logits(x)): probability vector for a sample, or [n,c] row
// probabilities for a batch.
Tensor class_conditional(const LogitModel& model, const Tensor& x);

// Unnormalized log joint density of a clean sample, its adversary and a
// label: g(x)[y] + g(x_adv)[y] - lambda*d(x, x_adv).
double joint_logdensity_unnorm(const EnergyView& view, const Tensor& x,
                               const Tensor& x_adv, int y);

// Conditional of the adversary given the clean sample, with the partition
// ratio taken as 1: g(x_adv)[y] - lambda*d(x, x_adv).
double adv_conditional_logdensity(const EnergyView& view, const Tensor& x,
                                  const Tensor& x_adv, int y);

// Records sum_i [ g(x_adv_i)[y_i] - lambda*d(x_i, x_adv_i) ] on a tape.
// x_clean enters as a constant; gradients flow to x_adv (and, through the
// logits map, to any tracked parameters).
GradTape::NodeId tape_adv_conditional_sum(const EnergyView& view,
                                          GradTape& tape,
                                          GradTape::NodeId x_clean,
                                          GradTape::NodeId x_adv,
                                          const std::vector<int>& labels);

}  // namespace bbc
