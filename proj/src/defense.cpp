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

#include "bbc/defense.hpp"

#include <string>

namespace bbc {

AppendedHead init_head(Eigen::Index input_width, Eigen::Index num_classes,
                       RngStream& rng) {
  AppendedHead head;
  Tensor w1({num_classes, input_width});
  for (Eigen::Index i = 0; i < w1.size(); ++i) w1[i] = rng.normal(0.0, 0.01);
  Tensor b1({num_classes});
  for (Eigen::Index i = 0; i < b1.size(); ++i) b1[i] = rng.normal(0.0, 0.01);
  head.params.tensors.push_back(std::move(w1));
  head.params.tensors.push_back(std::move(b1));
  head.params.tensors.push_back(Tensor({num_classes, num_classes}));
  head.params.tensors.push_back(Tensor({num_classes}));
  return head;
}

Eigen::Index BbcEnsemble::head_input_width() const {
  return skip_input == SkipInput::kVictimLogits ? victim.num_classes()
                                                : victim.latent_dim();
}

void BbcEnsemble::validate() const {
  if (!victim.frozen()) throw ContractError("ensemble victim must be frozen");
  if (heads.empty()) throw ContractError("ensemble needs at least one head");
  for (const AppendedHead& h : heads) {
    if (h.params.tensors.size() != 4) {
      throw ContractError("head must hold two affine layers");
    }
    if (h.input_width() != head_input_width() ||
        h.output_width() != victim.num_classes()) {
      throw ContractError("head widths do not match the victim");
    }
  }
}

BbcEnsemble make_ensemble(VictimClassifier victim, std::size_t n_heads,
                          std::uint64_t seed, SkipInput skip) {
  if (n_heads < 1) throw ContractError("ensemble needs at least one head");
  BbcEnsemble ens;
  ens.victim = std::move(victim);
  ens.victim.freeze();
  ens.skip_input = skip;
  for (std::size_t n = 0; n < n_heads; ++n) {
    RngStream rng(seed, "head-init", n);
    ens.heads.push_back(
        init_head(ens.head_input_width(), ens.victim.num_classes(), rng));
  }
  ens.validate();
  return ens;
}

WrappedHead::WrappedHead(const BbcEnsemble& ens, std::size_t head_index)
    : ens_(&ens), index_(head_index) {
  if (head_index >= ens.heads.size()) {
    throw ContractError("head index out of range");
  }
}

GradTape::NodeId WrappedHead::tape_logits_tracked(GradTape& tape,
                                                  GradTape::NodeId x,
                                                  TapeParams& head_params) const {
  head_params = add_params(tape, ens_->heads[index_].params, true);
  return tape_logits_with(tape, x, head_params);
}

GradTape::NodeId WrappedHead::tape_logits_with(
    GradTape& tape, GradTape::NodeId x, const TapeParams& head_params) const {
  const AppendedHead& head = ens_->heads[index_];
  const VictimClassifier& victim = ens_->victim;
  TapeParams vp = add_params(tape, victim.params(), false);
  auto layers = tape_mlp_layers(tape, vp, x, victim.arch());
  const GradTape::NodeId victim_logits = layers.back();
  GradTape::NodeId phi = victim_logits;
  if (ens_->skip_input == SkipInput::kLatentFeatures) {
    if (layers.size() < 2) {
      throw ContractError("latent skip requires at least two victim layers");
    }
    phi = layers[layers.size() - 2];
  }
  GradTape::NodeId hidden = tape.activation(
      tape.affine(phi, head_params.ids[0], head_params.ids[1]),
      head.hidden_act);
  GradTape::NodeId f = tape.affine(hidden, head_params.ids[2],
                                   head_params.ids[3]);
  return tape.add(f, victim_logits);
}

GradTape::NodeId WrappedHead::tape_logits(GradTape& tape,
                                          GradTape::NodeId x) const {
  TapeParams p = add_params(tape, ens_->heads[index_].params, false);
  return tape_logits_with(tape, x, p);
}

Tensor WrappedHead::logits(const Tensor& x) const {
  GradTape t;
  return t.value(tape_logits(t, t.constant(x)));
}

Tensor wrapped_logits(const BbcEnsemble& ens, std::size_t head_index,
                      const Tensor& x) {
  return WrappedHead(ens, head_index).logits(x);
}

namespace {

// In latent mode the latent tap reruns the victim stack; fold both feeds
// into one tape by tapping the shared layer outputs.
struct TrackedForward {
  GradTape::NodeId logits;
  TapeParams head_params;
};

TrackedForward tracked_forward(const BbcEnsemble& ens, std::size_t head,
                               GradTape& tape, GradTape::NodeId x) {
  WrappedHead model(ens, head);
  TrackedForward out;
  out.logits = model.tape_logits_tracked(tape, x, out.head_params);
  return out;
}

}  // namespace

std::vector<Tensor> grad_h1(const BbcEnsemble& ens, std::size_t head,
                            const LabeledData& batch) {
  GradTape t;
  auto fwd = tracked_forward(ens, head, t, t.constant(batch.features));
  t.backward(tape_cross_entropy_mean(t, fwd.logits, batch.labels));
  return param_grads(t, fwd.head_params);
}

std::vector<Tensor> grad_h2(const BbcEnsemble& ens, std::size_t head,
                            const Tensor& pos, const Tensor& neg,
                            EnergyConvention convention) {
  if (pos.rows() < 1 || neg.rows() < 1) {
    throw ContractError("contrastive batches must be non-empty");
  }
  GradTape t;
  auto fwd_pos = tracked_forward(ens, head, t, t.constant(pos));
  // Reuse the same tracked parameter leaves for the negative pass.
  WrappedHead model(ens, head);
  auto neg_logits =
      model.tape_logits_with(t, t.constant(neg), fwd_pos.head_params);
  auto objective = t.sub(tape_u_mean(t, fwd_pos.logits, convention),
                         tape_u_mean(t, neg_logits, convention));
  t.backward(objective);
  return param_grads(t, fwd_pos.head_params);
}

std::vector<Tensor> grad_h3_batch(const BbcEnsemble& ens, std::size_t head,
                                  const Tensor& x_adv,
                                  const std::vector<int>& labels) {
  GradTape t;
  auto fwd = tracked_forward(ens, head, t, t.constant(x_adv));
  const double inv = 1.0 / static_cast<double>(labels.size());
  t.backward(t.scale(t.sum(t.pick(fwd.logits, labels)), inv));
  return param_grads(t, fwd.head_params);
}

std::vector<Tensor> grad_h3(const BbcEnsemble& ens, std::size_t head,
                            const Tensor& x, const Tensor& x_adv, int y) {
  if (!x.same_shape(x_adv)) {
    throw DimensionError("clean and adversarial samples differ in shape");
  }
  return grad_h3_batch(ens, head,
                       x_adv.rank() == 1
                           ? x_adv.reshaped({1, x_adv.size()})
                           : x_adv,
                       {y});
}

void BbcTrainConfig::validate() const {
  if (iterations < 0) throw ContractError("iterations must be non-negative");
  if (batch_pos < 1 || batch_neg < 1) {
    throw ContractError("batch sizes must be at least 1");
  }
  if (lambda < 0) throw ContractError("lambda must be non-negative");
  sgld_data.validate();
  sgld_adv.validate();
  hmc.validate();
}

void train(BbcEnsemble& ens, const LabeledData& data,
           const BbcTrainConfig& cfg, const DistanceFn& distance) {
  ens.validate();
  data.validate();
  cfg.validate();
  const std::uint64_t checksum_before = ens.victim.checksum();
  const std::size_t n_heads = ens.heads.size();

  // Independent streams, replay buffers and sampler states per head.
  std::vector<RngStream> batch_rng, chain_rng, adv_rng, hmc_rng;
  std::vector<PcdBuffer> buffers(n_heads);
  std::vector<AdaHmcState> hmc_state(n_heads, cfg.hmc);
  for (std::size_t n = 0; n < n_heads; ++n) {
    batch_rng.emplace_back(cfg.seed, "bbc-batch", n);
    chain_rng.emplace_back(cfg.seed, "bbc-chain", n);
    adv_rng.emplace_back(cfg.seed, "bbc-adv", n);
    hmc_rng.emplace_back(cfg.seed, "bbc-hmc", n);
    buffers[n].capacity = cfg.buffer_capacity;
    buffers[n].reinit_prob = cfg.reinit_prob;
    buffers[n].sample_shape = {data.dim()};
    buffers[n].box = data.box;
  }

  SgldConfig adv_cfg = cfg.sgld_adv;
  adv_cfg.init_perturb = cfg.init_perturb_fraction * data.box.range();
  const double scale = cfg.likelihood_scale > 0
                           ? cfg.likelihood_scale
                           : static_cast<double>(data.size());

  const Eigen::Index d = data.dim();
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    for (std::size_t n = 0; n < n_heads; ++n) {
      WrappedHead model(ens, n);
      EnergyView view{&model, cfg.lambda, &distance};

      // mini-batch
      std::vector<std::size_t> idx(static_cast<std::size_t>(cfg.batch_pos));
      for (auto& i : idx) {
        i = batch_rng[n].uniform_index(data.labels.size());
      }
      LabeledData batch = data.subset(idx);

      std::vector<Tensor> h1 = grad_h1(ens, n, batch);

      // negative phase from the persistent buffer
      Tensor neg0({cfg.batch_neg, d});
      for (int r = 0; r < cfg.batch_neg; ++r) {
        Tensor s = pcd_draw(buffers[n], chain_rng[n]);
        neg0.array().segment(r * d, d) = s.array();
      }
      Tensor neg = run_energy_chain(std::move(neg0), model, cfg.energy,
                                    cfg.sgld_data, chain_rng[n]);
      for (int r = 0; r < cfg.batch_neg; ++r) {
        Tensor s({d});
        s.array() = neg.array().segment(r * d, d);
        pcd_store(buffers[n], std::move(s), chain_rng[n]);
      }
      std::vector<Tensor> h2 =
          grad_h2(ens, n, batch.features, neg, cfg.energy);

      // adversarial phase seeded from the mini-batch
      Tensor x_adv = run_adv_chain_batch(batch.features, batch.labels, view,
                                         adv_cfg, adv_rng[n]);
      std::vector<Tensor> h3 = grad_h3_batch(ens, n, x_adv, batch.labels);

      // h1 is a loss gradient while h2/h3 are log-density ascent directions;
      // flip the latter so the sampler's descent update maximizes the joint,
      // and scale the batch means up to the full-data gradient the sampler
      // expects.
      std::vector<Tensor> h;
      h.reserve(h1.size());
      for (std::size_t k = 0; k < h1.size(); ++k) {
        h.push_back(Tensor(h1[k].shape(),
                           scale * (h1[k].array() - h2[k].array() -
                                    h3[k].array())));
      }

      for (int t = 0; t < cfg.hmc.inner_steps; ++t) {
        adahmc_step(ens.heads[n].params, h, hmc_state[n], hmc_rng[n]);
      }
    }
  }

  if (ens.victim.current_checksum() != checksum_before) {
    throw ContractError("victim parameters changed during training");
  }
}

namespace {

// Running mean that leaves identical inputs bit-identical.
void welford_update(Tensor& mean, const Tensor& sample, std::size_t k) {
  if (k == 1) {
    mean = sample;
    return;
  }
  mean.array() += (sample.array() - mean.array()) / static_cast<double>(k);
}

}  // namespace

Tensor predict_bma(const BbcEnsemble& ens, const Tensor& x) {
  ens.validate();
  Tensor mean;
  for (std::size_t n = 0; n < ens.heads.size(); ++n) {
    GradTape t;
    Tensor probs = t.value(
        t.softmax_rows(t.constant(wrapped_logits(ens, n, x))));
    welford_update(mean, probs, n + 1);
  }
  return mean;
}

std::vector<int> predict_labels(const BbcEnsemble& ens, const Tensor& x) {
  Tensor p = predict_bma(ens, x);
  const Eigen::Index rows = p.rows(), cols = p.cols();
  std::vector<int> out;
  out.reserve(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < cols; ++c) {
      if (p.array()[i * cols + c] > p.array()[i * cols + best]) best = c;
    }
    out.push_back(static_cast<int>(best));
  }
  return out;
}

double bma_accuracy(const BbcEnsemble& ens, const LabeledData& data) {
  std::vector<int> pred = predict_labels(ens, data.features);
  Eigen::Index correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

Tensor expected_input_gradient(const BbcEnsemble& ens, const Tensor& x,
                               int y) {
  ens.validate();
  if (x.rank() != 1) {
    throw ContractError("expected_input_gradient takes one sample");
  }
  Tensor mean;
  for (std::size_t n = 0; n < ens.heads.size(); ++n) {
    WrappedHead model(ens, n);
    GradTape t;
    auto xid = t.leaf(x, true);
    auto logits = model.tape_logits(t, xid);
    t.backward(tape_cross_entropy_mean(t, logits, {y}));
    welford_update(mean, *t.grad(xid), n + 1);
  }
  return mean;
}

}  // namespace bbc
