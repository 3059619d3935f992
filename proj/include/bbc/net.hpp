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
#include <vector>

#include "bbc/rng.hpp"
#include "bbc/tape.hpp"

namespace bbc {

// One fully-connected layer: affine [out,in] followed by an activation.
struct LayerSpec {
  Eigen::Index in = 0;
  Eigen::Index out = 0;
  Activation act = Activation::kIdentity;
};

// Ordered parameter tensors; for an MLP: W0, b0, W1, b1, ...
struct ParameterSet {
  std::vector<Tensor> tensors;

  Eigen::Index count() const {
    return static_cast<Eigen::Index>(tensors.size());
  }
  // Total scalar count across all tensors.
  Eigen::Index scalar_count() const;
  void ensure_finite(const std::string& context) const;
};

// FNV-1a 64 over the raw little-endian float bytes of every tensor in order.
std::uint64_t params_checksum(const ParameterSet& params);

// Validates that consecutive layers are width-compatible.
void validate_arch(const std::vector<LayerSpec>& arch);

// Xavier-uniform weights, zero biases, drawn from the given stream.
ParameterSet init_mlp_params(const std::vector<LayerSpec>& arch,
                             RngStream& rng);

// Node ids of parameters placed on a tape.
struct TapeParams {
  std::vector<GradTape::NodeId> ids;
};

TapeParams add_params(GradTape& tape, const ParameterSet& params,
                      bool track_grad);

// Forward pass of x ([d] or [n,d]) through the layer stack, recording on the
// tape. Returns the post-activation output of every layer; back() is the
// network output.
std::vector<GradTape::NodeId> tape_mlp_layers(GradTape& tape,
                                              const TapeParams& params,
                                              GradTape::NodeId x,
                                              const std::vector<LayerSpec>& arch);

GradTape::NodeId tape_mlp(GradTape& tape, const TapeParams& params,
                          GradTape::NodeId x,
                          const std::vector<LayerSpec>& arch);

// Plain forward pass: logits for x ([d] -> [c], [n,d] -> [n,c]).
// Deterministic: identical arguments produce bit-identical outputs.
Tensor forward_mlp(const ParameterSet& params, const Tensor& x,
                   const std::vector<LayerSpec>& arch);

// Mean softmax cross-entropy over rows of a logits node.
GradTape::NodeId tape_cross_entropy_mean(GradTape& tape, GradTape::NodeId logits,
                                         const std::vector<int>& labels);

// Per-set total (sum over rows) cross-entropy; row gradients stay per-sample.
GradTape::NodeId tape_cross_entropy_sum(GradTape& tape, GradTape::NodeId logits,
                                        const std::vector<int>& labels);

// Gradients of a scalar loss w.r.t. every parameter tensor, in order.
std::vector<Tensor> param_grads(const GradTape& tape, const TapeParams& params);

}  // namespace bbc
