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

#include <vector>

#include "bbc/tensor.hpp"

namespace bbc {

// Axis-aligned box the data lives in; attacks clamp to it.
struct DataBox {
  double lo = 0.0;
  double hi = 1.0;

  double range() const { return hi - lo; }
};

// In-memory labeled dataset: one sample per row of features.
struct LabeledData {
  Tensor features;  // [n, d]
  std::vector<int> labels;
  int num_classes = 0;
  DataBox box;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  // Row i as a rank-1 tensor.
  Tensor sample(Eigen::Index i) const;
  // Rows given by idx as a [k, d] tensor plus their labels.
  LabeledData subset(const std::vector<std::size_t>& idx) const;

  void validate() const;
};

}  // namespace bbc
