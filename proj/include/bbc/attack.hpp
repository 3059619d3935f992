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

#include <string>

#include "bbc/defense.hpp"

namespace bbc {

enum class AttackNorm { kLinf, kL2 };
enum class AttackKind { kFgsm, kPgd, kEotPgd, kScoreQuery };

// Attack budget and schedule. epsilon and step are absolute in the
// (normalized) data units of the dataset box.
struct ThreatModel {
  AttackNorm norm = AttackNorm::kLinf;
  double epsilon = 0.15;
  double step = 0.02;     // alpha
  int iterations = 20;    // T; also the query budget of the score attack
  int eot_samples = 1;    // K
  double eot_noise_std = 0.0;
  bool random_start = false;
  std::uint64_t seed = 0;
  DataBox box;

  void validate() const;
};

struct AttackResult {
  Tensor x_adv;
  bool success = false;  // argmax of predict_bma != true label
  int queries = 0;       // model evaluations spent
  double final_loss = 0.0;

  double l2_dist = 0.0;
  double linf_dist = 0.0;
};

// Projection of a perturbation onto the epsilon-ball (exposed for tests).
Tensor project_ball(const Tensor& delta, AttackNorm norm, double epsilon);

// Single signed-gradient step at the full budget; linf only.
AttackResult fgsm(const BbcEnsemble& ens, const Tensor& x, int y,
                  const ThreatModel& tm);

// Iterated projected ascent on the ensemble-average loss. With T=1, step =
// epsilon and no random start this reduces bitwise to fgsm.
AttackResult pgd(const BbcEnsemble& ens, const Tensor& x, int y,
                 const ThreatModel& tm);

// PGD with the gradient averaged over eot_samples noise-perturbed
// evaluations per step; K=1 with zero noise reduces bitwise to pgd.
AttackResult eot_pgd(const BbcEnsemble& ens, const Tensor& x, int y,
                     const ThreatModel& tm);

// Gradient-free random search over coordinate perturbations; sees only
// predict_bma outputs. iterations is the query budget.
AttackResult score_query_attack(const BbcEnsemble& ens, const Tensor& x, int y,
                                const ThreatModel& tm);

AttackResult run_attack(AttackKind kind, const BbcEnsemble& ens,
                        const Tensor& x, int y, const ThreatModel& tm);

AttackKind attack_kind_from_string(const std::string& s);
std::string to_string(AttackKind kind);
std::string to_string(AttackNorm norm);
AttackNorm attack_norm_from_string(const std::string& s);

// Fraction of correctly classified attacked samples (the defense metric).
double robust_accuracy(AttackKind kind, const BbcEnsemble& ens,
                       const LabeledData& data, const ThreatModel& tm);

}  // namespace bbc
