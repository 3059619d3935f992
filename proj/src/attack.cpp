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

#include "bbc/attack.hpp"

#include <cmath>
#include <iostream>

namespace bbc {

void ThreatModel::validate() const {
  if (epsilon <= 0) throw ContractError("attack epsilon must be positive");
  if (step <= 0) throw ContractError("attack step must be positive");
  if (iterations < 0) throw ContractError("iterations must be non-negative");
  if (eot_samples < 1) throw ContractError("eot_samples must be at least 1");
  if (step > epsilon) {
    std::cerr << "warning: attack step " << step << " exceeds epsilon "
              << epsilon << "\n";
  }
}

Tensor project_ball(const Tensor& delta, AttackNorm norm, double epsilon) {
  Tensor out = delta;
  if (norm == AttackNorm::kLinf) {
    out.array() = out.array().max(-epsilon).min(epsilon);
    return out;
  }
  const double n = std::sqrt(out.array().square().sum());
  if (n > epsilon) out.array() *= epsilon / n;
  return out;
}

namespace {

Tensor clamp_box(const Tensor& x, const DataBox& box) {
  Tensor out = x;
  out.array() = out.array().max(box.lo).min(box.hi);
  return out;
}

int argmax_label(const Tensor& probs) {
  int best = 0;
  for (Eigen::Index c = 1; c < probs.size(); ++c) {
    if (probs[c] > probs[best]) best = static_cast<int>(c);
  }
  return best;
}

// Loss of the attacked model: -log of the BMA probability of the true label.
// Gradients flow through every head's softmax.
struct LossGrad {
  double loss;
  Tensor grad;
};

LossGrad ensemble_loss_grad(const BbcEnsemble& ens, const Tensor& x, int y) {
  GradTape t;
  auto xid = t.leaf(x, true);
  GradTape::NodeId acc = -1;
  for (std::size_t n = 0; n < ens.heads.size(); ++n) {
    WrappedHead model(ens, n);
    auto probs = t.softmax_rows(model.tape_logits(t, xid));
    acc = (acc < 0) ? probs : t.add(acc, probs);
  }
  acc = t.scale(acc, 1.0 / static_cast<double>(ens.heads.size()));
  // fully saturated ensembles can drive the picked probability to exact 0
  auto loss = t.scale(t.log(t.clamp_min(t.pick(acc, {y}), 1e-300)), -1.0);
  t.backward(loss);
  return {t.value(loss).item(), *t.grad(xid)};
}

Tensor sign_of(const Tensor& g) {
  Tensor s(g.shape());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    s[i] = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
  }
  return s;
}

void finalize(AttackResult& r, const BbcEnsemble& ens, const Tensor& x, int y) {
  Tensor p = predict_bma(ens, r.x_adv);
  ++r.queries;
  r.success = argmax_label(p) != y;
  r.final_loss = -std::log(std::max(p[y], 1e-300));
  r.l2_dist = std::sqrt((r.x_adv.array() - x.array()).square().sum());
  r.linf_dist = (r.x_adv.array() - x.array()).abs().maxCoeff();
}

// Projected ascent core shared by pgd and eot_pgd. The perturbation is
// tracked separately from x so budget projection is exact.
AttackResult pgd_core(const BbcEnsemble& ens, const Tensor& x, int y,
                      const ThreatModel& tm, bool eot_noise) {
  tm.validate();
  ens.validate();
  RngStream rng(tm.seed, "attack");
  Tensor delta(x.shape());
  if (tm.random_start) {
    if (tm.norm == AttackNorm::kLinf) {
      for (Eigen::Index i = 0; i < delta.size(); ++i) {
        delta[i] = rng.uniform(-tm.epsilon, tm.epsilon);
      }
    } else {
      for (Eigen::Index i = 0; i < delta.size(); ++i) delta[i] = rng.normal();
      const double r =
          tm.epsilon *
          std::pow(rng.uniform01(), 1.0 / static_cast<double>(delta.size()));
      const double n = std::sqrt(delta.array().square().sum());
      if (n > 0) delta.array() *= r / n;
    }
    delta = project_ball(delta, tm.norm, tm.epsilon);
  }

  AttackResult result;
  for (int t = 0; t < tm.iterations; ++t) {
    Tensor x_eval = clamp_box(Tensor(x.shape(), x.array() + delta.array()),
                              tm.box);
    Tensor grad(x.shape());
    if (eot_noise) {
      for (int k = 0; k < tm.eot_samples; ++k) {
        Tensor noisy(x.shape());
        for (Eigen::Index i = 0; i < noisy.size(); ++i) {
          noisy[i] = x_eval[i] + tm.eot_noise_std * rng.normal();
        }
        LossGrad lg = ensemble_loss_grad(ens, noisy, y);
        grad.array() += lg.grad.array();
        ++result.queries;
      }
      grad.array() /= static_cast<double>(tm.eot_samples);
    } else {
      LossGrad lg = ensemble_loss_grad(ens, x_eval, y);
      grad = std::move(lg.grad);
      ++result.queries;
    }

    Tensor move(x.shape());
    if (tm.norm == AttackNorm::kLinf) {
      move = Tensor(grad.shape(), tm.step * sign_of(grad).array());
    } else {
      const double n = std::sqrt(grad.array().square().sum());
      if (n > 0) move = Tensor(grad.shape(), tm.step / n * grad.array());
    }
    delta = project_ball(
        Tensor(delta.shape(), delta.array() + move.array()), tm.norm,
        tm.epsilon);
  }
  result.x_adv = clamp_box(Tensor(x.shape(), x.array() + delta.array()),
                           tm.box);
  finalize(result, ens, x, y);
  return result;
}

}  // namespace

AttackResult fgsm(const BbcEnsemble& ens, const Tensor& x, int y,
                  const ThreatModel& tm) {
  if (tm.norm != AttackNorm::kLinf) {
    throw ContractError("fgsm is an linf attack");
  }
  tm.validate();
  ens.validate();
  AttackResult result;
  LossGrad lg = ensemble_loss_grad(ens, x, y);
  ++result.queries;
  Tensor delta(x.shape(), tm.epsilon * sign_of(lg.grad).array());
  result.x_adv = clamp_box(Tensor(x.shape(), x.array() + delta.array()),
                           tm.box);
  finalize(result, ens, x, y);
  return result;
}

AttackResult pgd(const BbcEnsemble& ens, const Tensor& x, int y,
                 const ThreatModel& tm) {
  if (tm.iterations < 1) throw ContractError("pgd needs at least one step");
  return pgd_core(ens, x, y, tm, false);
}

AttackResult eot_pgd(const BbcEnsemble& ens, const Tensor& x, int y,
                     const ThreatModel& tm) {
  if (tm.iterations < 1) throw ContractError("eot_pgd needs at least one step");
  return pgd_core(ens, x, y, tm, true);
}

AttackResult score_query_attack(const BbcEnsemble& ens, const Tensor& x, int y,
                                const ThreatModel& tm) {
  tm.validate();
  ens.validate();
  RngStream rng(tm.seed, "query-attack");
  AttackResult result;
  result.x_adv = x;
  const int budget = tm.iterations;
  if (budget == 0) return result;

  Tensor p = predict_bma(ens, x);
  ++result.queries;
  result.final_loss = -std::log(std::max(p[y], 1e-300));
  if (argmax_label(p) != y) {
    result.success = true;
    return result;
  }

  Tensor delta(x.shape());
  double best_loss = result.final_loss;
  while (result.queries < budget) {
    // flip one random coordinate to a budget-corner value
    Tensor cand = delta;
    const Eigen::Index i =
        static_cast<Eigen::Index>(rng.uniform_index(x.size()));
    cand[i] = rng.bernoulli(0.5) ? tm.epsilon : -tm.epsilon;
    cand = project_ball(cand, tm.norm, tm.epsilon);
    Tensor x_cand = clamp_box(Tensor(x.shape(), x.array() + cand.array()),
                              tm.box);
    Tensor pc = predict_bma(ens, x_cand);
    ++result.queries;
    const double loss = -std::log(std::max(pc[y], 1e-300));
    if (argmax_label(pc) != y) {
      result.x_adv = x_cand;
      result.success = true;
      result.final_loss = loss;
      result.l2_dist = std::sqrt((x_cand.array() - x.array()).square().sum());
      result.linf_dist = (x_cand.array() - x.array()).abs().maxCoeff();
      return result;
    }
    if (loss > best_loss) {
      best_loss = loss;
      delta = cand;
    }
  }
  result.x_adv = clamp_box(Tensor(x.shape(), x.array() + delta.array()),
                           tm.box);
  result.final_loss = best_loss;
  result.l2_dist = std::sqrt((result.x_adv.array() - x.array()).square().sum());
  result.linf_dist = (result.x_adv.array() - x.array()).abs().maxCoeff();
  return result;
}

AttackResult run_attack(AttackKind kind, const BbcEnsemble& ens,
                        const Tensor& x, int y, const ThreatModel& tm) {
  switch (kind) {
    case AttackKind::kFgsm:
      return fgsm(ens, x, y, tm);
    case AttackKind::kPgd:
      return pgd(ens, x, y, tm);
    case AttackKind::kEotPgd:
      return eot_pgd(ens, x, y, tm);
    case AttackKind::kScoreQuery:
      return score_query_attack(ens, x, y, tm);
  }
  throw ContractError("unknown attack kind");
}

double robust_accuracy(AttackKind kind, const BbcEnsemble& ens,
                       const LabeledData& data, const ThreatModel& tm) {
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    ThreatModel per = tm;
    per.seed = stream_seed(tm.seed, "attack-sample",
                           static_cast<std::uint64_t>(i));
    AttackResult r = run_attack(kind, ens, data.sample(i),
                                data.labels[static_cast<std::size_t>(i)], per);
    if (!r.success) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

AttackKind attack_kind_from_string(const std::string& s) {
  if (s == "fgsm") return AttackKind::kFgsm;
  if (s == "pgd") return AttackKind::kPgd;
  if (s == "eot_pgd") return AttackKind::kEotPgd;
  if (s == "query") return AttackKind::kScoreQuery;
  throw ConfigError("unknown attack kind: " + s);
}

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kFgsm:
      return "fgsm";
    case AttackKind::kPgd:
      return "pgd";
    case AttackKind::kEotPgd:
      return "eot_pgd";
    case AttackKind::kScoreQuery:
      return "query";
  }
  throw ContractError("unknown attack kind");
}

std::string to_string(AttackNorm norm) {
  return norm == AttackNorm::kLinf ? "linf" : "l2";
}

AttackNorm attack_norm_from_string(const std::string& s) {
  if (s == "linf") return AttackNorm::kLinf;
  if (s == "l2") return AttackNorm::kL2;
  throw ConfigError("unknown attack norm: " + s);
}

}  // namespace bbc
