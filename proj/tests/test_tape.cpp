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

#include <doctest.h>

#include "bbc/net.hpp"
#include "bbc/rng.hpp"
#include "oracles.hpp"

using namespace bbc;

TEST_CASE("backward of sum is all ones") {
  GradTape t;
  auto x = t.leaf(Tensor::vector({1, 2, 3}), true);
  t.backward(t.sum(x));
  Tensor g = *t.grad(x);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(g[i] == 1.0);
}

TEST_CASE("backward of half squared norm returns the input") {
  GradTape t;
  auto x = t.leaf(Tensor::vector({3, -4}), true);
  auto loss = t.scale(t.sum(t.square(x)), 0.5);
  t.backward(loss);
  Tensor g = *t.grad(x);
  CHECK(g[0] == doctest::Approx(3.0));
  CHECK(g[1] == doctest::Approx(-4.0));
}

TEST_CASE("non-scalar loss is a contract error") {
  GradTape t;
  auto x = t.leaf(Tensor::vector({1, 2}), true);
  CHECK_THROWS_AS(t.backward(x), ContractError);
}

TEST_CASE("untracked leaves have no gradient") {
  GradTape t;
  auto x = t.leaf(Tensor::vector({1, 2}), true);
  auto c = t.leaf(Tensor::vector({5, 6}), false);
  t.backward(t.sum(t.add(x, c)));
  CHECK(t.grad(x).has_value());
  CHECK_FALSE(t.grad(c).has_value());
}

TEST_CASE("tracked but disconnected leaf gets zeros") {
  GradTape t;
  auto x = t.leaf(Tensor::vector({1, 2}), true);
  auto y = t.leaf(Tensor::vector({3.0}), true);
  t.backward(t.sum(y));
  Tensor g = *t.grad(x);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
}

TEST_CASE("backward may run once per tape") {
  GradTape t;
  auto x = t.leaf(Tensor::scalar(2.0), true);
  auto s = t.sum(x);
  t.backward(s);
  CHECK_THROWS_AS(t.backward(s), ContractError);
}

TEST_CASE("non-finite op output raises a numeric error") {
  GradTape t;
  auto x = t.leaf(Tensor::vector({-1.0}), true);
  CHECK_THROWS_AS(t.log(x), NumericError);
}

namespace {

// Random architectures and inputs for finite-difference checks.
std::vector<LayerSpec> random_arch(RngStream& rng, Eigen::Index in,
                                   Eigen::Index out) {
  const Activation acts[] = {Activation::kRelu, Activation::kTanh,
                             Activation::kIdentity};
  const Eigen::Index hidden = 3 + static_cast<Eigen::Index>(rng.uniform_index(5));
  return {{in, hidden, acts[rng.uniform_index(3)]},
          {hidden, out, Activation::kIdentity}};
}

double net_loss(const ParameterSet& params, const std::vector<LayerSpec>& arch,
                const Tensor& x, const std::vector<int>& labels) {
  GradTape t;
  TapeParams p = add_params(t, params, false);
  auto logits = tape_mlp(t, p, t.constant(x), arch);
  return t.value(tape_cross_entropy_mean(t, logits, labels)).item();
}

}  // namespace

TEST_CASE("gradient check: 100 random nets match finite differences") {
  RngStream rng(42, "fd-check");
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index in = 2 + static_cast<Eigen::Index>(rng.uniform_index(3));
    const Eigen::Index out = 2 + static_cast<Eigen::Index>(rng.uniform_index(2));
    auto arch = random_arch(rng, in, out);
    ParameterSet params = init_mlp_params(arch, rng);
    const Eigen::Index batch = 1 + static_cast<Eigen::Index>(rng.uniform_index(3));
    Tensor x({batch, in});
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(-2, 2);
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < batch; ++i) {
      labels.push_back(static_cast<int>(rng.uniform_index(out)));
    }

    GradTape t;
    TapeParams p = add_params(t, params, true);
    auto xid = t.leaf(x, true);
    t.backward(tape_cross_entropy_mean(t, tape_mlp(t, p, xid, arch), labels));

    // parameter gradients
    for (std::size_t k = 0; k < params.tensors.size(); ++k) {
      Tensor fd = test::fd_grad(
          [&](const Tensor& w) {
            ParameterSet q = params;
            q.tensors[k] = w;
            return net_loss(q, arch, x, labels);
          },
          params.tensors[k]);
      if (!test::grads_close(*t.grad(p.ids[k]), fd)) ++failures;
    }
    // input gradient
    Tensor fdx = test::fd_grad(
        [&](const Tensor& xv) { return net_loss(params, arch, xv, labels); },
        x);
    if (!test::grads_close(*t.grad(xid), fdx)) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("softmax rows sum to one and match gradient identity") {
  RngStream rng(9);
  GradTape t;
  Tensor z({3, 4});
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.uniform(-3, 3);
  auto zid = t.leaf(z, true);
  auto sm = t.softmax_rows(zid);
  const Tensor& p = t.value(sm);
  for (Eigen::Index r = 0; r < 3; ++r) {
    double s = 0;
    for (Eigen::Index c = 0; c < 4; ++c) s += p.at(r, c);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  // d(sum of first column)/dz matches finite differences
  std::vector<Eigen::Index> idx = {0, 4, 8};
  t.backward(t.sum(t.gather(sm, idx, {3})));
  Tensor fd = test::fd_grad(
      [&](const Tensor& zv) {
        GradTape t2;
        auto s = t2.softmax_rows(t2.constant(zv));
        return t2.value(t2.sum(t2.gather(s, idx, {3}))).item();
      },
      z);
  CHECK(test::grads_close(*t.grad(zid), fd));
}

TEST_CASE("normalize_rows gradient matches finite differences") {
  RngStream rng(11);
  Tensor v({2, 3});
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-1, 1);
  GradTape t;
  auto vid = t.leaf(v, true);
  auto picked = t.pick(t.normalize_rows(vid, 1e-12), {0, 2});
  t.backward(t.sum(picked));
  Tensor fd = test::fd_grad(
      [&](const Tensor& vv) {
        GradTape t2;
        auto n = t2.normalize_rows(t2.constant(vv), 1e-12);
        return t2.value(t2.sum(t2.pick(n, {0, 2}))).item();
      },
      v);
  CHECK(test::grads_close(*t.grad(vid), fd));
}

TEST_CASE("sqrt and gather compose with correct gradients") {
  Tensor v = Tensor::vector({4.0, 9.0, 16.0});
  GradTape t;
  auto vid = t.leaf(v, true);
  auto y = t.sqrt_guarded(t.gather(vid, {2, 0}, {2}));
  t.backward(t.sum(y));
  Tensor g = *t.grad(vid);
  CHECK(g[0] == doctest::Approx(0.25));   // d sqrt(4)/d4 = 1/(2*2)
  CHECK(g[1] == 0.0);
  CHECK(g[2] == doctest::Approx(0.125));  // 1/(2*4)
}

TEST_CASE("sum_sq_diff value and gradient") {
  Tensor a = Tensor::vector({1, 2});
  Tensor b = Tensor::vector({3, -1});
  GradTape t;
  auto aid = t.leaf(a, true);
  auto bid = t.leaf(b, true);
  auto d = t.sum_sq_diff(aid, bid);
  CHECK(t.value(d).item() == doctest::Approx(4.0 + 9.0));
  t.backward(d);
  CHECK((*t.grad(aid))[0] == doctest::Approx(-4.0));
  CHECK((*t.grad(bid))[0] == doctest::Approx(4.0));
}
