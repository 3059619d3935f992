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

#include "bbc/tensor.hpp"

#include <sstream>

namespace bbc {

Eigen::Index shape_size(const Shape& shape) {
  Eigen::Index n = 1;
  for (Eigen::Index d : shape) {
    if (d <= 0) throw ContractError("tensor shape has non-positive dimension");
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  data_ = Eigen::ArrayXd::Zero(shape_size(shape_));
}

Tensor::Tensor(Shape shape, Eigen::ArrayXd data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw DimensionError("tensor data length does not match shape");
  }
}

Tensor Tensor::scalar(double v) {
  Tensor t({1});
  t.data_[0] = v;
  return t;
}

Tensor Tensor::vector(std::initializer_list<double> v) {
  const Eigen::Index n = static_cast<Eigen::Index>(v.size());
  Eigen::ArrayXd a(n);
  Eigen::Index i = 0;
  for (double x : v) a[i++] = x;
  return Tensor({n}, std::move(a));
}

Tensor Tensor::matrix(Eigen::Index rows, Eigen::Index cols,
                      std::initializer_list<double> v) {
  Eigen::ArrayXd a(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) a[i++] = x;
  return Tensor({rows, cols}, std::move(a));
}

Eigen::Index Tensor::dim(std::size_t i) const {
  if (i >= shape_.size()) throw DimensionError("tensor dim index out of range");
  return shape_[i];
}

double Tensor::at(Eigen::Index r, Eigen::Index c) const {
  if (rank() != 2) throw DimensionError("at(r,c) requires a rank-2 tensor");
  return data_[r * shape_[1] + c];
}

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item() requires a single-element tensor, got shape " +
                        shape_str());
  }
  return data_[0];
}

Eigen::Map<const RowMatrixXd> Tensor::mat() const {
  if (rank() == 1) {
    return Eigen::Map<const RowMatrixXd>(data_.data(), 1, shape_[0]);
  }
  if (rank() != 2) throw DimensionError("mat() requires rank 1 or 2");
  return Eigen::Map<const RowMatrixXd>(data_.data(), shape_[0], shape_[1]);
}

Eigen::Map<RowMatrixXd> Tensor::mat() {
  if (rank() == 1) {
    return Eigen::Map<RowMatrixXd>(data_.data(), 1, shape_[0]);
  }
  if (rank() != 2) throw DimensionError("mat() requires rank 1 or 2");
  return Eigen::Map<RowMatrixXd>(data_.data(), shape_[0], shape_[1]);
}

Eigen::Index Tensor::rows() const {
  return rank() == 1 ? 1 : dim(0);
}

Eigen::Index Tensor::cols() const {
  return rank() == 1 ? dim(0) : dim(1);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != size()) {
    throw DimensionError("reshape changes element count");
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::ensure_finite(const std::string& context) const {
  if (!all_finite()) {
    throw NumericError("non-finite values in " + context);
  }
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ",";
    os << shape_[i];
  }
  os << "]";
  return os.str();
}

namespace {

// Stable logsumexp of one contiguous stretch.
double lse1(const double* p, Eigen::Index n, Eigen::Index stride) {
  double m = p[0];
  for (Eigen::Index i = 1; i < n; ++i) m = std::max(m, p[i * stride]);
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) s += std::exp(p[i * stride] - m);
  return m + std::log(s);
}

}  // namespace

Tensor logsumexp(const Tensor& v, int axis) {
  if (v.rank() == 1) {
    if (axis != 0) throw ContractError("logsumexp: rank-1 tensor needs axis 0");
    if (v.size() == 0) throw ContractError("logsumexp over empty axis");
    Tensor out = Tensor::scalar(lse1(v.array().data(), v.size(), 1));
    out.ensure_finite("logsumexp");
    return out;
  }
  if (v.rank() != 2) throw DimensionError("logsumexp supports rank 1 or 2");
  const Eigen::Index r = v.dim(0), c = v.dim(1);
  if (axis == 1) {
    Tensor out({r});
    for (Eigen::Index i = 0; i < r; ++i) {
      out[i] = lse1(v.array().data() + i * c, c, 1);
    }
    out.ensure_finite("logsumexp");
    return out;
  }
  if (axis == 0) {
    Tensor out({c});
    for (Eigen::Index j = 0; j < c; ++j) {
      out[j] = lse1(v.array().data() + j, r, c);
    }
    out.ensure_finite("logsumexp");
    return out;
  }
  throw ContractError("logsumexp: invalid axis");
}

}  // namespace bbc
