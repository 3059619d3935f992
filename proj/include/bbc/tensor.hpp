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

#include <Eigen/Core>

#include <initializer_list>
#include <string>
#include <vector>

#include "bbc/errors.hpp"

namespace bbc {

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Shape = std::vector<Eigen::Index>;

// Dense row-major tensor of doubles; the universal value carrier. Tensors are
// plain values: copying is deep, sharing across threads is safe.
class Tensor {
 public:
  Tensor() = default;

  // Zero-filled tensor of the given shape.
  explicit Tensor(Shape shape);

  Tensor(Shape shape, Eigen::ArrayXd data);

  static Tensor scalar(double v);
  static Tensor vector(std::initializer_list<double> v);
  // Row-major 2-D tensor.
  static Tensor matrix(Eigen::Index rows, Eigen::Index cols,
                       std::initializer_list<double> v);

  const Shape& shape() const { return shape_; }
  Eigen::Index rank() const { return static_cast<Eigen::Index>(shape_.size()); }
  Eigen::Index size() const { return data_.size(); }
  Eigen::Index dim(std::size_t i) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  // Flat row-major element access.
  double operator[](Eigen::Index i) const { return data_[i]; }
  double& operator[](Eigen::Index i) { return data_[i]; }

  // 2-D element access; requires rank 2.
  double at(Eigen::Index r, Eigen::Index c) const;

  // Value of a single-element tensor.
  double item() const;

  const Eigen::ArrayXd& array() const { return data_; }
  Eigen::ArrayXd& array() { return data_; }

  // 2-D matrix view; requires rank 2 (or rank 1, seen as one row).
  Eigen::Map<const RowMatrixXd> mat() const;
  Eigen::Map<RowMatrixXd> mat();

  Eigen::Index rows() const;
  Eigen::Index cols() const;

  // Same data, new shape; element count must match.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const { return data_.allFinite(); }

  // Throws NumericError if any element is NaN/Inf.
  void ensure_finite(const std::string& context) const;

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && (data_ == other.data_).all();
  }

  std::string shape_str() const;

 private:
  Shape shape_;
  Eigen::ArrayXd data_;
};

// product(shape); throws ContractError on non-positive dimensions.
Eigen::Index shape_size(const Shape& shape);

// Numerically stable log(sum(exp(v))) along an axis. For rank-1 tensors only
// axis 0 is valid and the result is a single-element tensor; for rank-2,
// axis 1 reduces rows and axis 0 reduces columns.
Tensor logsumexp(const Tensor& v, int axis);

}  // namespace bbc
