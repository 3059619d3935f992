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

#include "bbc/defense.hpp"

namespace bbc {

// Noise-disagreement detector: score = fraction of noisy evaluations whose
// argmax disagrees with the clean evaluation. The single-draw rule is
// recovered at draws=1, threshold=0.
struct DetectorConfig {
  double noise_std = 0.05;
  int draws = 16;          // K
  double threshold = 0.0;  // flag when score > threshold
  std::uint64_t seed = 0;

  void validate() const;
};

// predict_bma on a Gaussian-perturbed input. sigma = 0 is bit-identical to
// predict_bma.
Tensor randomized_defend(const BbcEnsemble& ens, const Tensor& x, double sigma,
                         RngStream& rng);

struct DetectResult {
  double score = 0.0;
  bool flagged = false;
};

DetectResult detect(const BbcEnsemble& ens, const Tensor& x,
                    const DetectorConfig& cfg, RngStream& rng);

struct RocMetrics {
  double tpr = 0.0;
  double fpr = 0.0;
  double auroc = 0.0;
};

// TPR/FPR at the given threshold plus the threshold-free AUROC (rank
// statistic, ties counted half).
RocMetrics roc_metrics(const std::vector<double>& scores_clean,
                       const std::vector<double>& scores_adv,
                       double threshold);

}  // namespace bbc
