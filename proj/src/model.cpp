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

#include "bbc/model.hpp"

#include <cmath>

namespace bbc {

void TrainConfig::validate() const {
  if (epochs < 0) throw ContractError("epochs must be non-negative");
  if (batch_size < 1) throw ContractError("batch_size must be at least 1");
  if (learning_rate <= 0) throw ContractError("learning_rate must be positive");
}

void LabeledData::validate() const {
  if (features.rank() != 2) throw ContractError("features must be [n, d]");
  if (static_cast<Eigen::Index>(labels.size()) != features.dim(0)) {
    throw ContractError("one label per sample required");
  }
  if (labels.empty()) throw ContractError("dataset is empty");
  if (num_classes < 2) throw ContractError("need at least two classes");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw ContractError("label out of range");
  }
}

Tensor LabeledData::sample(Eigen::Index i) const {
  const Eigen::Index d = dim();
  Tensor out({d});
  out.array() = features.array().segment(i * d, d);
  return out;
}

LabeledData LabeledData::subset(const std::vector<std::size_t>& idx) const {
  const Eigen::Index d = dim();
  LabeledData out;
  out.features = Tensor({static_cast<Eigen::Index>(idx.size()), d});
  out.labels.reserve(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.features.array().segment(static_cast<Eigen::Index>(k) * d, d) =
        features.array().segment(static_cast<Eigen::Index>(idx[k]) * d, d);
    out.labels.push_back(labels[idx[k]]);
  }
  out.num_classes = num_classes;
  out.box = box;
  return out;
}

VictimClassifier::VictimClassifier(std::vector<LayerSpec> arch,
                                   ParameterSet params, bool frozen)
    : arch_(std::move(arch)), params_(std::move(params)) {
  validate_arch(arch_);
  if (params_.count() != static_cast<Eigen::Index>(arch_.size()) * 2) {
    throw ContractError("victim parameters do not match architecture");
  }
  if (frozen) freeze();
}

std::uint64_t VictimClassifier::checksum() const {
  if (!frozen_) throw ContractError("checksum is only pinned after freeze");
  return checksum_;
}

Tensor VictimClassifier::logits(const Tensor& x) const {
  return forward_mlp(params_, x, arch_);
}

GradTape::NodeId VictimClassifier::tape_logits(GradTape& tape,
                                               GradTape::NodeId x) const {
  TapeParams p = add_params(tape, params_, false);
  return tape_mlp(tape, p, x, arch_);
}

GradTape::NodeId VictimClassifier::tape_latent(GradTape& tape,
                                               GradTape::NodeId x) const {
  if (arch_.size() < 2) {
    throw ContractError("latent tap requires at least two layers");
  }
  TapeParams p = add_params(tape, params_, false);
  auto layers = tape_mlp_layers(tape, p, x, arch_);
  return layers[layers.size() - 2];
}

Eigen::Index VictimClassifier::latent_dim() const {
  if (arch_.size() < 2) {
    throw ContractError("latent tap requires at least two layers");
  }
  return arch_[arch_.size() - 2].out;
}

void VictimClassifier::set_params(ParameterSet params) {
  if (frozen_) throw ContractError("frozen victim parameters are immutable");
  if (params.count() != params_.count()) {
    throw ContractError("parameter count mismatch");
  }
  params_ = std::move(params);
}

void VictimClassifier::freeze() {
  if (frozen_) return;
  frozen_ = true;
  checksum_ = params_checksum(params_);
}

VictimClassifier freeze(VictimClassifier model) {
  model.freeze();
  return model;
}

double accuracy(const LogitModel& model, const LabeledData& data) {
  Tensor z = model.logits(data.features);
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < z.cols(); ++c) {
      if (z.at(i, c) > z.at(i, best)) best = c;
    }
    if (best == data.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(z.rows());
}

namespace {

std::vector<std::size_t> batch_indices(const std::vector<std::size_t>& perm,
                                       std::size_t start, std::size_t count) {
  std::vector<std::size_t> idx;
  idx.reserve(count);
  for (std::size_t i = start; i < start + count && i < perm.size(); ++i) {
    idx.push_back(perm[i]);
  }
  return idx;
}

void sgd_update(ParameterSet& params, const std::vector<Tensor>& grads,
                double lr) {
  for (std::size_t k = 0; k < params.tensors.size(); ++k) {
    params.tensors[k].array() -= lr * grads[k].array();
  }
}

}  // namespace

VictimClassifier train_standard(const LabeledData& data, const TrainConfig& cfg,
                                const std::vector<LayerSpec>& arch) {
  cfg.validate();
  data.validate();
  validate_arch(arch);
  RngStream init_rng(cfg.seed, "victim-init");
  RngStream shuffle_rng(cfg.seed, "victim-shuffle");
  ParameterSet params = init_mlp_params(arch, init_rng);

  const std::size_t n = data.labels.size();
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto perm = shuffle_rng.permutation(n);
    for (std::size_t start = 0; start < n; start += bs) {
      LabeledData batch = data.subset(batch_indices(perm, start, bs));
      GradTape t;
      TapeParams p = add_params(t, params, true);
      auto logits = tape_mlp(t, p, t.constant(batch.features), arch);
      t.backward(tape_cross_entropy_mean(t, logits, batch.labels));
      sgd_update(params, param_grads(t, p), cfg.learning_rate);
    }
  }
  params.ensure_finite("trained victim parameters");
  return VictimClassifier(arch, std::move(params));
}

VictimClassifier pretrain_energy_joint(const LabeledData& data,
                                       const TrainConfig& cfg,
                                       const SgldConfig& sampler,
                                       const std::vector<LayerSpec>& arch) {
  cfg.validate();
  data.validate();
  validate_arch(arch);
  sampler.validate();
  if (sampler.steps < 1) {
    throw ContractError("energy pretraining needs a chain of length >= 1");
  }
  RngStream init_rng(cfg.seed, "victim-init");
  RngStream shuffle_rng(cfg.seed, "victim-shuffle");
  RngStream chain_rng(cfg.seed, "victim-jem-chain");
  ParameterSet params = init_mlp_params(arch, init_rng);

  PcdBuffer buffer;
  buffer.sample_shape = {data.dim()};
  buffer.box = data.box;
  buffer.capacity = std::max<Eigen::Index>(128, cfg.batch_size);

  const std::size_t n = data.labels.size();
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto perm = shuffle_rng.permutation(n);
    for (std::size_t start = 0; start < n; start += bs) {
      LabeledData batch = data.subset(batch_indices(perm, start, bs));
      VictimClassifier current(arch, params);

      // Negative phase: persistent chains ascend U(g(x)).
      Tensor neg0({batch.size(), batch.dim()});
      for (Eigen::Index r = 0; r < batch.size(); ++r) {
        Tensor s = pcd_draw(buffer, chain_rng);
        neg0.array().segment(r * batch.dim(), batch.dim()) = s.array();
      }
      Tensor neg =
          run_energy_chain(neg0, current, cfg.energy, sampler, chain_rng);
      for (Eigen::Index r = 0; r < batch.size(); ++r) {
        Tensor s({batch.dim()});
        s.array() = neg.array().segment(r * batch.dim(), batch.dim());
        pcd_store(buffer, std::move(s), chain_rng);
      }

      GradTape t;
      TapeParams p = add_params(t, params, true);
      auto logits_pos = tape_mlp(t, p, t.constant(batch.features), arch);
      auto logits_neg = tape_mlp(t, p, t.constant(neg), arch);
      auto ce = tape_cross_entropy_mean(t, logits_pos, batch.labels);
      auto u_pos = tape_u_mean(t, logits_pos, cfg.energy);
      auto u_neg = tape_u_mean(t, logits_neg, cfg.energy);
      const double u_pos_v = t.value(u_pos).item();
      const double u_neg_v = t.value(u_neg).item();
      if (std::abs(u_pos_v) > cfg.divergence_limit ||
          std::abs(u_neg_v) > cfg.divergence_limit) {
        throw NumericError(
            "energy pretraining diverged: |U| exceeded " +
            std::to_string(cfg.divergence_limit) + " at epoch " +
            std::to_string(epoch));
      }
      // loss = CE - (U+ - U-)
      auto loss = t.add(ce, t.sub(u_neg, u_pos));
      t.backward(loss);
      sgd_update(params, param_grads(t, p), cfg.learning_rate);
    }
  }
  params.ensure_finite("pretrained victim parameters");
  return VictimClassifier(arch, std::move(params));
}

VictimClassifier train_victim(const LabeledData& data, const TrainConfig& cfg,
                              const SgldConfig& sampler,
                              const std::vector<LayerSpec>& arch) {
  if (cfg.mode == TrainMode::kStandard) {
    return train_standard(data, cfg, arch);
  }
  return pretrain_energy_joint(data, cfg, sampler, arch);
}

}  // namespace bbc
