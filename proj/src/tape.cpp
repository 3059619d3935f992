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

#include "bbc/tape.hpp"

#include <cmath>
#include <utility>

namespace bbc {

Tensor apply_activation(const Tensor& x, Activation act) {
  switch (act) {
    case Activation::kIdentity:
      return x;
    case Activation::kRelu:
      return Tensor(x.shape(), x.array().max(0.0));
    case Activation::kTanh:
      return Tensor(x.shape(), x.array().tanh());
  }
  throw ContractError("unknown activation");
}

GradTape::NodeId GradTape::push(
    Tensor value, std::function<void(GradTape&, NodeId)> backprop) {
  if (!value.all_finite()) {
    throw NumericError("non-finite values in tape op " +
                       std::string(current_op_ ? current_op_ : "?"));
  }
  Node n;
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  grads_.emplace_back();
  return static_cast<NodeId>(nodes_.size()) - 1;
}

GradTape::NodeId GradTape::leaf(Tensor value, bool track_grad) {
  value.ensure_finite("tape leaf");
  Node n;
  n.value = std::move(value);
  n.is_leaf = true;
  n.track = track_grad;
  nodes_.push_back(std::move(n));
  grads_.emplace_back();
  return static_cast<NodeId>(nodes_.size()) - 1;
}

void GradTape::add_grad(NodeId id, const Eigen::ArrayXd& g) {
  Node& n = nodes_[id];
  if (n.is_leaf && !n.track) return;  // untracked leaf: gradient absent
  if (!n.reached) {
    grads_[id] = g;
    n.reached = true;
  } else {
    grads_[id] += g;
  }
}

GradTape::NodeId GradTape::affine(NodeId x, NodeId w, NodeId b) {
  current_op_ = "affine";
  const Tensor& xv = nodes_[x].value;
  const Tensor& wv = nodes_[w].value;
  const Tensor& bv = nodes_[b].value;
  if (wv.rank() != 2 || bv.rank() != 1 || wv.dim(0) != bv.dim(0)) {
    throw DimensionError("affine: weight must be [out,in], bias [out]");
  }
  if (xv.cols() != wv.dim(1)) {
    throw DimensionError("affine: input width " + xv.shape_str() +
                         " does not match weight " + wv.shape_str());
  }
  const Eigen::Index n = xv.rows(), out = wv.dim(0);
  Tensor y(xv.rank() == 1 ? Shape{out} : Shape{n, out});
  y.mat().noalias() = xv.mat() * wv.mat().transpose();
  y.mat().rowwise() += bv.array().matrix().transpose();

  auto back = [x, w, b, n, out](GradTape& t, NodeId self) {
    const Tensor& xv = t.nodes_[x].value;
    const Tensor& wv = t.nodes_[w].value;
    Eigen::Map<const RowMatrixXd> gy(t.grads_[self].data(), n, out);
    if (t.nodes_[x].track || !t.nodes_[x].is_leaf) {
      Eigen::ArrayXd gx(xv.size());
      Eigen::Map<RowMatrixXd>(gx.data(), n, xv.cols()).noalias() =
          gy * wv.mat();
      t.add_grad(x, gx);
    }
    if (t.nodes_[w].track || !t.nodes_[w].is_leaf) {
      Eigen::ArrayXd gw(wv.size());
      Eigen::Map<RowMatrixXd>(gw.data(), out, wv.dim(1)).noalias() =
          gy.transpose() * xv.mat();
      t.add_grad(w, gw);
    }
    if (t.nodes_[b].track || !t.nodes_[b].is_leaf) {
      Eigen::ArrayXd gb = gy.colwise().sum().transpose().array();
      t.add_grad(b, gb);
    }
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::activation(NodeId x, Activation act) {
  current_op_ = "activation";
  if (act == Activation::kIdentity) return x;
  const Tensor& xv = nodes_[x].value;
  Tensor y = apply_activation(xv, act);
  auto back = [x, act](GradTape& t, NodeId self) {
    const Eigen::ArrayXd& gy = t.grads_[self];
    const Eigen::ArrayXd& yv = t.nodes_[self].value.array();
    const Eigen::ArrayXd& xv = t.nodes_[x].value.array();
    if (act == Activation::kRelu) {
      t.add_grad(x, (xv > 0.0).cast<double>() * gy);
    } else {
      t.add_grad(x, (1.0 - yv.square()) * gy);
    }
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::add(NodeId a, NodeId b) {
  current_op_ = "add";
  const Tensor& av = nodes_[a].value;
  const Tensor& bv = nodes_[b].value;
  if (!av.same_shape(bv)) throw DimensionError("add: shape mismatch");
  Tensor y(av.shape(), av.array() + bv.array());
  auto back = [a, b](GradTape& t, NodeId self) {
    t.add_grad(a, t.grads_[self]);
    t.add_grad(b, t.grads_[self]);
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::sub(NodeId a, NodeId b) {
  return add_scaled(a, b, -1.0);
}

GradTape::NodeId GradTape::scale(NodeId a, double c) {
  current_op_ = "scale";
  Tensor y(nodes_[a].value.shape(), nodes_[a].value.array() * c);
  auto back = [a, c](GradTape& t, NodeId self) {
    t.add_grad(a, (t.grads_[self] * c).eval());
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::add_scaled(NodeId a, NodeId b, double c) {
  current_op_ = "add_scaled";
  const Tensor& av = nodes_[a].value;
  const Tensor& bv = nodes_[b].value;
  if (!av.same_shape(bv)) throw DimensionError("add_scaled: shape mismatch");
  Tensor y(av.shape(), av.array() + c * bv.array());
  auto back = [a, b, c](GradTape& t, NodeId self) {
    t.add_grad(a, t.grads_[self]);
    t.add_grad(b, (t.grads_[self] * c).eval());
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::clamp_min(NodeId a, double floor) {
  current_op_ = "clamp_min";
  Tensor y(nodes_[a].value.shape(), nodes_[a].value.array().max(floor));
  auto back = [a, floor](GradTape& t, NodeId self) {
    const Eigen::ArrayXd& av = t.nodes_[a].value.array();
    t.add_grad(a, ((av > floor).cast<double>() * t.grads_[self]).eval());
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::square(NodeId a) {
  current_op_ = "square";
  Tensor y(nodes_[a].value.shape(), nodes_[a].value.array().square());
  auto back = [a](GradTape& t, NodeId self) {
    t.add_grad(a, (2.0 * t.nodes_[a].value.array() * t.grads_[self]).eval());
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::sqrt_guarded(NodeId a) {
  current_op_ = "sqrt_guarded";
  Tensor y(nodes_[a].value.shape(), nodes_[a].value.array().sqrt());
  auto back = [a](GradTape& t, NodeId self) {
    const Eigen::ArrayXd& yv = t.nodes_[self].value.array();
    t.add_grad(a, (0.5 / yv.max(1e-12) * t.grads_[self]).eval());
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::log(NodeId a) {
  current_op_ = "log";
  Tensor y(nodes_[a].value.shape(), nodes_[a].value.array().log());
  auto back = [a](GradTape& t, NodeId self) {
    t.add_grad(a, (t.grads_[self] / t.nodes_[a].value.array()).eval());
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::sum(NodeId a) {
  current_op_ = "sum";
  Tensor y = Tensor::scalar(nodes_[a].value.array().sum());
  auto back = [a](GradTape& t, NodeId self) {
    const double g = t.grads_[self][0];
    t.add_grad(a, Eigen::ArrayXd::Constant(t.nodes_[a].value.size(), g));
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::mean(NodeId a) {
  const double inv = 1.0 / static_cast<double>(nodes_[a].value.size());
  return scale(sum(a), inv);
}

GradTape::NodeId GradTape::row_sum(NodeId a) {
  current_op_ = "row_sum";
  const Tensor& av = nodes_[a].value;
  const Eigen::Index n = av.rows(), c = av.cols();
  Tensor y({n});
  y.array() = av.mat().rowwise().sum().array();
  auto back = [a, n, c](GradTape& t, NodeId self) {
    Eigen::ArrayXd g(n * c);
    Eigen::Map<RowMatrixXd>(g.data(), n, c).colwise() =
        t.grads_[self].matrix();
    t.add_grad(a, g);
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::row_mean(NodeId a) {
  const double inv = 1.0 / static_cast<double>(nodes_[a].value.cols());
  return scale(row_sum(a), inv);
}

GradTape::NodeId GradTape::row_logsumexp(NodeId a) {
  current_op_ = "row_logsumexp";
  const Tensor& av = nodes_[a].value;
  Tensor y = logsumexp(av.rank() == 1 ? av.reshaped({1, av.size()}) : av, 1);
  const Eigen::Index n = av.rows(), c = av.cols();
  auto back = [a, n, c](GradTape& t, NodeId self) {
    const Tensor& av = t.nodes_[a].value;
    const Eigen::ArrayXd& lse = t.nodes_[self].value.array();
    Eigen::ArrayXd g(n * c);
    Eigen::Map<RowMatrixXd> gm(g.data(), n, c);
    gm = (av.mat().array().colwise() - lse).exp();
    gm.array().colwise() *= t.grads_[self];
    t.add_grad(a, g);
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::pick(NodeId a, std::vector<int> labels) {
  current_op_ = "pick";
  const Tensor& av = nodes_[a].value;
  const Eigen::Index n = av.rows(), c = av.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw DimensionError("pick: one label per row required");
  }
  Tensor y({n});
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= c) {
      throw ContractError("pick: label out of range");
    }
    y[i] = av.array()[i * c + labels[i]];
  }
  auto back = [a, n, c, labels = std::move(labels)](GradTape& t, NodeId self) {
    Eigen::ArrayXd g = Eigen::ArrayXd::Zero(n * c);
    for (Eigen::Index i = 0; i < n; ++i) {
      g[i * c + labels[i]] = t.grads_[self][i];
    }
    t.add_grad(a, g);
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::softmax_rows(NodeId a) {
  current_op_ = "softmax_rows";
  const Tensor& av = nodes_[a].value;
  const Eigen::Index n = av.rows(), c = av.cols();
  Tensor lse = logsumexp(av.rank() == 1 ? av.reshaped({1, av.size()}) : av, 1);
  Tensor y(av.shape());
  {
    Eigen::Map<RowMatrixXd> ym(y.array().data(), n, c);
    ym = (av.mat().array().colwise() - lse.array()).exp();
  }
  auto back = [a, n, c](GradTape& t, NodeId self) {
    Eigen::Map<const RowMatrixXd> yv(t.nodes_[self].value.array().data(), n, c);
    Eigen::Map<const RowMatrixXd> gy(t.grads_[self].data(), n, c);
    Eigen::ArrayXd g(n * c);
    Eigen::Map<RowMatrixXd> gm(g.data(), n, c);
    const Eigen::VectorXd dot = (gy.array() * yv.array()).rowwise().sum();
    gm = yv.array() * (gy.array().colwise() - dot.array());
    t.add_grad(a, g);
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::normalize_rows(NodeId a, double floor) {
  current_op_ = "normalize_rows";
  const Tensor& av = nodes_[a].value;
  const Eigen::Index n = av.rows(), c = av.cols();
  Eigen::ArrayXd norms(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    norms[i] = std::max(av.mat().row(i).norm(), floor);
  }
  Tensor y(av.shape());
  Eigen::Map<RowMatrixXd>(y.array().data(), n, c) =
      av.mat().array().colwise() / norms;
  auto back = [a, n, c, floor, norms](GradTape& t, NodeId self) {
    const Tensor& av = t.nodes_[a].value;
    Eigen::Map<const RowMatrixXd> gy(t.grads_[self].data(), n, c);
    Eigen::ArrayXd g(n * c);
    Eigen::Map<RowMatrixXd> gm(g.data(), n, c);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto v = av.mat().row(i);
      const double nn = norms[i];
      if (v.norm() > floor) {
        const double dot = gy.row(i).dot(v);
        gm.row(i) = gy.row(i) / nn - v * (dot / (nn * nn * nn));
      } else {
        gm.row(i) = gy.row(i) / nn;  // clamped norm: constant denominator
      }
    }
    t.add_grad(a, g);
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::gather(NodeId a, std::vector<Eigen::Index> idx,
                                  Shape out_shape) {
  current_op_ = "gather";
  const Tensor& av = nodes_[a].value;
  if (shape_size(out_shape) != static_cast<Eigen::Index>(idx.size())) {
    throw DimensionError("gather: output shape does not match index count");
  }
  Tensor y(out_shape);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= av.size()) {
      throw ContractError("gather: index out of range");
    }
    y[static_cast<Eigen::Index>(k)] = av.array()[idx[k]];
  }
  auto back = [a, idx = std::move(idx)](GradTape& t, NodeId self) {
    Eigen::ArrayXd g = Eigen::ArrayXd::Zero(t.nodes_[a].value.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      g[idx[k]] += t.grads_[self][static_cast<Eigen::Index>(k)];
    }
    t.add_grad(a, g);
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::reshape(NodeId a, Shape out_shape) {
  current_op_ = "reshape";
  Tensor y = nodes_[a].value.reshaped(std::move(out_shape));
  auto back = [a](GradTape& t, NodeId self) {
    t.add_grad(a, t.grads_[self]);
  };
  return push(std::move(y), back);
}

GradTape::NodeId GradTape::sum_sq_diff(NodeId a, NodeId b) {
  current_op_ = "sum_sq_diff";
  const Tensor& av = nodes_[a].value;
  const Tensor& bv = nodes_[b].value;
  if (av.size() != bv.size()) {
    throw DimensionError("sum_sq_diff: shape mismatch " + av.shape_str() +
                         " vs " + bv.shape_str());
  }
  Tensor y = Tensor::scalar((av.array() - bv.array()).square().sum());
  auto back = [a, b](GradTape& t, NodeId self) {
    const double g = t.grads_[self][0];
    Eigen::ArrayXd diff =
        t.nodes_[a].value.array() - t.nodes_[b].value.array();
    t.add_grad(a, (2.0 * g * diff).eval());
    t.add_grad(b, (-2.0 * g * diff).eval());
  };
  return push(std::move(y), back);
}

void GradTape::backward(NodeId loss) {
  if (backward_done_) {
    throw ContractError("backward() may run once per tape");
  }
  backward_done_ = true;
  if (loss < 0 || loss >= node_count()) {
    throw ContractError("backward: invalid loss node");
  }
  if (nodes_[loss].value.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        nodes_[loss].value.shape_str());
  }
  nodes_[loss].reached = true;
  grads_[loss] = Eigen::ArrayXd::Ones(1);
  // Node ids are already topologically ordered; one reverse sweep visits
  // each node exactly once.
  for (NodeId id = loss; id >= 0; --id) {
    if (!nodes_[id].reached || !nodes_[id].backprop) continue;
    nodes_[id].backprop(*this, id);
  }
}

std::optional<Tensor> GradTape::grad(NodeId id) const {
  const Node& n = nodes_[id];
  if (n.is_leaf && !n.track) return std::nullopt;
  if (!n.reached) {
    if (n.is_leaf && n.track) {
      return Tensor(n.value.shape());  // tracked but disconnected: zeros
    }
    return std::nullopt;
  }
  return Tensor(n.value.shape(), grads_[id]);
}

}  // namespace bbc
