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

#include "bbc/net.hpp"

#include <cmath>

namespace bbc {

Eigen::Index ParameterSet::scalar_count() const {
  Eigen::Index n = 0;
  for (const Tensor& t : tensors) n += t.size();
  return n;
}

void ParameterSet::ensure_finite(const std::string& context) const {
  for (const Tensor& t : tensors) t.ensure_finite(context);
}

std::uint64_t params_checksum(const ParameterSet& params) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const Tensor& t : params.tensors) {
    h = fnv1a64(t.array().data(),
                static_cast<std::size_t>(t.size()) * sizeof(double), h);
  }
  return h;
}

void validate_arch(const std::vector<LayerSpec>& arch) {
  if (arch.empty()) throw ContractError("network needs at least one layer");
  for (std::size_t i = 0; i < arch.size(); ++i) {
    if (arch[i].in <= 0 || arch[i].out <= 0) {
      throw ContractError("layer widths must be positive");
    }
    if (i > 0 && arch[i].in != arch[i - 1].out) {
      throw ContractError("layer widths are not chained");
    }
  }
}

ParameterSet init_mlp_params(const std::vector<LayerSpec>& arch,
                             RngStream& rng) {
  validate_arch(arch);
  ParameterSet p;
  for (const LayerSpec& l : arch) {
    Tensor w({l.out, l.in});
    const double s = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.uniform(-s, s);
    p.tensors.push_back(std::move(w));
    p.tensors.push_back(Tensor({l.out}));
  }
  return p;
}

TapeParams add_params(GradTape& tape, const ParameterSet& params,
                      bool track_grad) {
  TapeParams out;
  out.ids.reserve(params.tensors.size());
  for (const Tensor& t : params.tensors) {
    out.ids.push_back(tape.leaf(t, track_grad));
  }
  return out;
}

std::vector<GradTape::NodeId> tape_mlp_layers(
    GradTape& tape, const TapeParams& params, GradTape::NodeId x,
    const std::vector<LayerSpec>& arch) {
  if (params.ids.size() != arch.size() * 2) {
    throw ContractError("parameter count does not match architecture");
  }
  std::vector<GradTape::NodeId> outs;
  outs.reserve(arch.size());
  GradTape::NodeId h = x;
  for (std::size_t i = 0; i < arch.size(); ++i) {
    h = tape.affine(h, params.ids[2 * i], params.ids[2 * i + 1]);
    h = tape.activation(h, arch[i].act);
    outs.push_back(h);
  }
  return outs;
}

GradTape::NodeId tape_mlp(GradTape& tape, const TapeParams& params,
                          GradTape::NodeId x,
                          const std::vector<LayerSpec>& arch) {
  return tape_mlp_layers(tape, params, x, arch).back();
}

Tensor forward_mlp(const ParameterSet& params, const Tensor& x,
                   const std::vector<LayerSpec>& arch) {
  GradTape tape;
  TapeParams p = add_params(tape, params, false);
  GradTape::NodeId xid = tape.constant(x);
  return tape.value(tape_mlp(tape, p, xid, arch));
}

GradTape::NodeId tape_cross_entropy_sum(GradTape& tape, GradTape::NodeId logits,
                                        const std::vector<int>& labels) {
  GradTape::NodeId lse = tape.row_logsumexp(logits);
  GradTape::NodeId picked = tape.pick(logits, labels);
  return tape.sum(tape.sub(lse, picked));
}

GradTape::NodeId tape_cross_entropy_mean(GradTape& tape,
                                         GradTape::NodeId logits,
                                         const std::vector<int>& labels) {
  const double inv = 1.0 / static_cast<double>(labels.size());
  return tape.scale(tape_cross_entropy_sum(tape, logits, labels), inv);
}

std::vector<Tensor> param_grads(const GradTape& tape, const TapeParams& params) {
  std::vector<Tensor> out;
  out.reserve(params.ids.size());
  for (GradTape::NodeId id : params.ids) {
    auto g = tape.grad(id);
    if (!g) throw ContractError("parameter gradient requested but not tracked");
    out.push_back(std::move(*g));
  }
  return out;
}

}  // namespace bbc
