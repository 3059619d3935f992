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

#include "bbc/detect.hpp"

namespace bbc {

void DetectorConfig::validate() const {
  if (noise_std < 0) throw ContractError("noise_std must be non-negative");
  if (draws < 1) throw ContractError("detector needs at least one draw");
  if (threshold < 0 || threshold > 1) {
    throw ContractError("threshold must lie in [0,1]");
  }
}

namespace {

int argmax_of(const Tensor& probs) {
  int best = 0;
  for (Eigen::Index c = 1; c < probs.size(); ++c) {
    if (probs[c] > probs[best]) best = static_cast<int>(c);
  }
  return best;
}

}  // namespace

Tensor randomized_defend(const BbcEnsemble& ens, const Tensor& x, double sigma,
                         RngStream& rng) {
  if (sigma < 0) throw ContractError("sigma must be non-negative");
  Tensor noisy = x;
  for (Eigen::Index i = 0; i < noisy.size(); ++i) {
    noisy[i] += sigma * rng.normal();
  }
  return predict_bma(ens, noisy);
}

DetectResult detect(const BbcEnsemble& ens, const Tensor& x,
                    const DetectorConfig& cfg, RngStream& rng) {
  cfg.validate();
  const int base = argmax_of(predict_bma(ens, x));
  int disagreements = 0;
  for (int k = 0; k < cfg.draws; ++k) {
    if (argmax_of(randomized_defend(ens, x, cfg.noise_std, rng)) != base) {
      ++disagreements;
    }
  }
  DetectResult r;
  r.score = static_cast<double>(disagreements) / cfg.draws;
  r.flagged = r.score > cfg.threshold;
  return r;
}

RocMetrics roc_metrics(const std::vector<double>& scores_clean,
                       const std::vector<double>& scores_adv,
                       double threshold) {
  if (scores_clean.empty() || scores_adv.empty()) {
    throw ContractError("roc_metrics needs non-empty score pools");
  }
  RocMetrics m;
  for (double s : scores_adv) {
    if (s > threshold) m.tpr += 1.0;
  }
  m.tpr /= static_cast<double>(scores_adv.size());
  for (double s : scores_clean) {
    if (s > threshold) m.fpr += 1.0;
  }
  m.fpr /= static_cast<double>(scores_clean.size());

  // Rank form of the area under the ROC curve; ties count half.
  double wins = 0.0;
  for (double a : scores_adv) {
    for (double c : scores_clean) {
      if (a > c) {
        wins += 1.0;
      } else if (a == c) {
        wins += 0.5;
      }
    }
  }
  m.auroc = wins / (static_cast<double>(scores_adv.size()) *
                    static_cast<double>(scores_clean.size()));
  return m;
}

}  // namespace bbc
