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

#include <doctest.h>

#include <cmath>

#include "bbc/rng.hpp"

using namespace bbc;

TEST_CASE("tensor shape and data stay consistent") {
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK_THROWS_AS(Tensor({2, 0}), ContractError);
  CHECK_THROWS_AS(Tensor({2, 3}, Eigen::ArrayXd::Zero(5)), DimensionError);
}

TEST_CASE("matrix view is row-major") {
  Tensor t = Tensor::matrix(2, 2, {1, 2, 3, 4});
  CHECK(t.at(0, 1) == 2);
  CHECK(t.at(1, 0) == 3);
  CHECK(t.mat()(1, 0) == 3);
}

TEST_CASE("ensure_finite rejects NaN and Inf") {
  Tensor t = Tensor::vector({1.0, 2.0});
  CHECK_NOTHROW(t.ensure_finite("test"));
  t[0] = std::nan("");
  CHECK_THROWS_AS(t.ensure_finite("test"), NumericError);
  t[0] = INFINITY;
  CHECK_THROWS_AS(t.ensure_finite("test"), NumericError);
}

TEST_CASE("logsumexp matches known values") {
  // [0,0] -> log 2
  CHECK(logsumexp(Tensor::vector({0, 0}), 0).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // single element -> itself
  CHECK(logsumexp(Tensor::vector({-3.25}), 0).item() == -3.25);
  // [2,0] -> 2.1269280110429727, frozen from an arbitrary-precision check
  CHECK(logsumexp(Tensor::vector({2, 0}), 0).item() ==
        doctest::Approx(2.1269280110429727).epsilon(1e-15));
}

TEST_CASE("logsumexp is stable for extreme inputs") {
  const double v = logsumexp(Tensor::vector({1000.0, 1000.0}), 0).item();
  CHECK(v == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-12));
  const double w = logsumexp(Tensor::vector({-1000.0, -1001.0}), 0).item();
  CHECK(std::isfinite(w));
}

TEST_CASE("logsumexp shift identity holds to 1e-12") {
  RngStream rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::ArrayXd v(5);
    for (int i = 0; i < 5; ++i) v[i] = rng.uniform(-4, 4);
    const double c = rng.uniform(-10, 10);
    const double base = logsumexp(Tensor({5}, v), 0).item();
    const double shifted = logsumexp(Tensor({5}, v + c), 0).item();
    CHECK(shifted == doctest::Approx(base + c).epsilon(1e-12));
  }
}

TEST_CASE("logsumexp over rows and columns") {
  Tensor m = Tensor::matrix(2, 2, {2, 0, 0, 0});
  Tensor rows = logsumexp(m, 1);
  CHECK(rows[0] == doctest::Approx(2.1269280110429727));
  CHECK(rows[1] == doctest::Approx(std::log(2.0)));
  Tensor cols = logsumexp(m, 0);
  CHECK(cols[0] == doctest::Approx(2.1269280110429727));
  CHECK(cols[1] == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(logsumexp(m, 2), ContractError);
  CHECK_THROWS_AS(logsumexp(Tensor::vector({1.0}), 1), ContractError);
}

TEST_CASE("logsumexp is monotone in each input") {
  Tensor v = Tensor::vector({0.5, -1.0, 2.0});
  const double base = logsumexp(v, 0).item();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    Tensor u = v;
    u[i] += 0.1;
    CHECK(logsumexp(u, 0).item() > base);
  }
}

TEST_CASE("rng streams are deterministic and named") {
  RngStream a(42, "unit", 0);
  RngStream b(42, "unit", 0);
  RngStream c(42, "unit", 1);
  const double va = a.normal();
  CHECK(va == b.normal());
  CHECK(va != c.normal());
}

TEST_CASE("rng permutation covers all indices") {
  RngStream rng(7);
  auto p = rng.permutation(100);
  std::vector<bool> seen(100, false);
  for (auto i : p) seen[i] = true;
  for (bool s : seen) CHECK(s);
}
