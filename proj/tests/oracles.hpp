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
//
// Independent oracles used by the test suites. Everything here is
// deliberately written with plain loops, independent of the library's
// Eigen/tape code paths.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "bbc/net.hpp"
#include "bbc/tensor.hpp"

namespace bbc::test {

// Central finite differences of a scalar function of one tensor.
inline Tensor fd_grad(const std::function<double(const Tensor&)>& f, Tensor x,
                      double h = 1e-5) {
  Tensor g(x.shape());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Elementwise |a-b| <= rel*max(|a|,|b|) + abs_floor.
inline bool grads_close(const Tensor& a, const Tensor& b, double rel = 1e-4,
                        double abs_floor = 1e-8) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double tol =
        rel * std::max(std::abs(a[i]), std::abs(b[i])) + abs_floor;
    if (std::abs(a[i] - b[i]) > tol) return false;
  }
  return true;
}

// Hand-rolled MLP forward with element loops; no Eigen, no tape.
inline std::vector<double> naive_mlp(const ParameterSet& params,
                                     const std::vector<LayerSpec>& arch,
                                     const std::vector<double>& x) {
  std::vector<double> h = x;
  for (std::size_t l = 0; l < arch.size(); ++l) {
    const Tensor& w = params.tensors[2 * l];
    const Tensor& b = params.tensors[2 * l + 1];
    std::vector<double> out(static_cast<std::size_t>(arch[l].out));
    for (Eigen::Index o = 0; o < arch[l].out; ++o) {
      double s = b[o];
      for (Eigen::Index i = 0; i < arch[l].in; ++i) {
        s += w[o * arch[l].in + i] * h[static_cast<std::size_t>(i)];
      }
      switch (arch[l].act) {
        case Activation::kRelu:
          s = s > 0.0 ? s : 0.0;
          break;
        case Activation::kTanh:
          s = std::tanh(s);
          break;
        case Activation::kIdentity:
          break;
      }
      out[static_cast<std::size_t>(o)] = s;
    }
    h = std::move(out);
  }
  return h;
}

// Squared Euclidean distance with a plain element loop.
inline double naive_euclidean_sq(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace bbc::test
