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

#include <functional>
#include <optional>
#include <vector>

#include "bbc/tensor.hpp"

namespace bbc {

enum class Activation { kIdentity, kRelu, kTanh };

// Reverse-mode gradient tape over Tensor-valued operations.
//
// A tape is built fresh for every forward pass, owns all intermediate values
// and is consumed by a single backward() call. Leaves added with
// track_grad=true (parameters, inputs) receive gradients; gradients of
// untracked leaves are never materialized. A tape is single-owner and
// single-threaded; parallelism happens across independent tapes.
class GradTape {
 public:
  using NodeId = Eigen::Index;

  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  // --- leaves ---------------------------------------------------------

  NodeId leaf(Tensor value, bool track_grad);
  NodeId constant(Tensor value) { return leaf(std::move(value), false); }

  // --- recorded operations --------------------------------------------

  // x: [n,in] or [in]; w: [out,in]; b: [out]. Returns x*w^T + b per row.
  NodeId affine(NodeId x, NodeId w, NodeId b);

  NodeId activation(NodeId x, Activation act);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  // a + c*b
  NodeId add_scaled(NodeId a, NodeId b, double c);

  NodeId square(NodeId a);
  // max(a, floor) elementwise; gradient is zero on clamped entries.
  NodeId clamp_min(NodeId a, double floor);
  // Elementwise sqrt; backward slope is clamped near zero.
  NodeId sqrt_guarded(NodeId a);
  NodeId log(NodeId a);

  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  // Row reductions of a [n,c] (or [c], seen as one row) tensor -> [n].
  NodeId row_sum(NodeId a);
  NodeId row_mean(NodeId a);
  NodeId row_logsumexp(NodeId a);

  // y_i = a(i, labels[i]); a is [n,c], labels has n entries in [0,c).
  NodeId pick(NodeId a, std::vector<int> labels);

  NodeId softmax_rows(NodeId a);

  // Each row divided by max(||row||_2, floor).
  NodeId normalize_rows(NodeId a, double floor);

  // y_k = a.flat[idx[k]], reshaped to out_shape.
  NodeId gather(NodeId a, std::vector<Eigen::Index> idx, Shape out_shape);

  // Same flat data under a new shape.
  NodeId reshape(NodeId a, Shape out_shape);

  // sum((a - b)^2) as a scalar node.
  NodeId sum_sq_diff(NodeId a, NodeId b);

  // --- backward --------------------------------------------------------

  // Runs reverse-mode accumulation from a scalar loss node. Each recorded
  // node is visited exactly once. May be called once per tape.
  void backward(NodeId loss);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }

  // Gradient of the loss w.r.t. a tracked leaf (or any reached node).
  // Untracked leaves have no gradient: nullopt, not zeros.
  std::optional<Tensor> grad(NodeId id) const;

  Eigen::Index node_count() const {
    return static_cast<Eigen::Index>(nodes_.size());
  }

 private:
  struct Node {
    Tensor value;
    std::function<void(GradTape&, NodeId)> backprop;  // null for leaves
    bool is_leaf = false;
    bool track = false;    // leaf marker: gradient requested
    bool reached = false;  // backward has accumulated into this node
  };

  NodeId push(Tensor value, std::function<void(GradTape&, NodeId)> backprop);
  // Accumulates g into the gradient buffer of node id.
  void add_grad(NodeId id, const Eigen::ArrayXd& g);
  Eigen::ArrayXd& grad_buf(NodeId id) { return grads_[id]; }

  std::vector<Node> nodes_;
  std::vector<Eigen::ArrayXd> grads_;
  bool backward_done_ = false;
  const char* current_op_ = nullptr;
};

// Applies an activation to a plain tensor (forward only).
Tensor apply_activation(const Tensor& x, Activation act);

}  // namespace bbc
