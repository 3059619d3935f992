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

#include "bbc/defense.hpp"

#include <doctest.h>

#include <cmath>

#include "bbc/dataset.hpp"
#include "oracles.hpp"

using namespace bbc;

namespace {

VictimClassifier const_victim(std::initializer_list<double> bias,
                              Eigen::Index in = 2) {
  std::vector<double> b(bias);
  const Eigen::Index out = static_cast<Eigen::Index>(b.size());
  ParameterSet p;
  p.tensors.push_back(Tensor({out, in}));
  Tensor bt({out});
  for (Eigen::Index i = 0; i < out; ++i) bt[i] = b[static_cast<std::size_t>(i)];
  p.tensors.push_back(bt);
  return freeze(VictimClassifier({{in, out, Activation::kIdentity}},
                                 std::move(p)));
}

VictimClassifier random_victim(std::uint64_t seed, Eigen::Index in = 2,
                               Eigen::Index out = 2) {
  RngStream rng(seed);
  std::vector<LayerSpec> arch = {{in, 8, Activation::kTanh},
                                 {8, out, Activation::kIdentity}};
  return freeze(VictimClassifier(arch, init_mlp_params(arch, rng)));
}

// Test-side composition oracle: victim logits and head layers via loops.
std::vector<double> naive_wrapped(const BbcEnsemble& ens, std::size_t head,
                                  const std::vector<double>& x) {
  auto z = bbc::test::naive_mlp(ens.victim.params(), ens.victim.arch(), x);
  const AppendedHead& h = ens.heads[head];
  const Eigen::Index c = h.output_width();
  const Eigen::Index in = h.input_width();
  std::vector<double> hidden(static_cast<std::size_t>(c));
  for (Eigen::Index i = 0; i < c; ++i) {
    double s = h.params.tensors[1][i];
    for (Eigen::Index j = 0; j < in; ++j) {
      s += h.params.tensors[0][i * in + j] * z[static_cast<std::size_t>(j)];
    }
    hidden[static_cast<std::size_t>(i)] = std::tanh(s);
  }
  std::vector<double> out(static_cast<std::size_t>(c));
  for (Eigen::Index i = 0; i < c; ++i) {
    double s = h.params.tensors[3][i];
    for (Eigen::Index j = 0; j < c; ++j) {
      s += h.params.tensors[2][i * c + j] * hidden[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(i)] = s + z[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace

TEST_CASE("zero-initialized head leaves the victim logits unchanged") {
  BbcEnsemble ens = make_ensemble(random_victim(3), 1, 42);
  Tensor x = Tensor::vector({0.3, -0.9});
  Tensor wrapped = wrapped_logits(ens, 0, x);
  Tensor victim = ens.victim.logits(x);
  CHECK(wrapped == victim);
}

TEST_CASE("head output is additive on top of the victim") {
  BbcEnsemble ens = make_ensemble(const_victim({1.0, -1.0}), 1, 1);
  // constant head correction [0.5, 0.5]
  ens.heads[0].params.tensors[0] = Tensor({2, 2});
  ens.heads[0].params.tensors[1] = Tensor({2});
  ens.heads[0].params.tensors[2] = Tensor({2, 2});
  ens.heads[0].params.tensors[3] = Tensor::vector({0.5, 0.5});
  Tensor w = wrapped_logits(ens, 0, Tensor::vector({0.2, 0.4}));
  CHECK(w[0] == doctest::Approx(1.5));
  CHECK(w[1] == doctest::Approx(-0.5));
}

TEST_CASE("wrapped logits match the composition oracle") {
  BbcEnsemble ens = make_ensemble(random_victim(9), 1, 7);
  RngStream rng(15);
  for (Eigen::Index i = 0; i < ens.heads[0].params.tensors[2].size(); ++i) {
    ens.heads[0].params.tensors[2][i] = rng.uniform(-0.5, 0.5);
  }
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    Tensor xt = Tensor::vector({x[0], x[1]});
    Tensor got = wrapped_logits(ens, 0, xt);
    auto want = naive_wrapped(ens, 0, x);
    CHECK(got[0] == doctest::Approx(want[0]).epsilon(1e-12));
    CHECK(got[1] == doctest::Approx(want[1]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(wrapped_logits(ens, 5, Tensor::vector({0, 0})),
                  ContractError);
}

TEST_CASE("grad_h1 vanishes for saturated logits") {
  BbcEnsemble ens = make_ensemble(const_victim({40.0, -40.0}), 1, 2);
  LabeledData batch;
  batch.features = Tensor::matrix(1, 2, {0.1, 0.1});
  batch.labels = {0};
  batch.num_classes = 2;
  auto g = grad_h1(ens, 0, batch);
  double norm = 0;
  for (const Tensor& t : g) norm += t.array().square().sum();
  CHECK(std::sqrt(norm) < 1e-6);
}

TEST_CASE("grad_h1 matches the hand-computed softmax gradient") {
  // W1 = 0 makes the chain explicit: hidden = tanh(b1), f = W2 tanh(b1) + b2.
  BbcEnsemble ens = make_ensemble(const_victim({0.4, -0.2}), 1, 2);
  AppendedHead& h = ens.heads[0];
  h.params.tensors[0] = Tensor({2, 2});
  h.params.tensors[1] = Tensor::vector({0.3, -0.6});
  h.params.tensors[2] = Tensor::matrix(2, 2, {0.2, -0.1, 0.5, 0.4});
  h.params.tensors[3] = Tensor::vector({0.05, -0.05});

  Tensor x = Tensor::vector({0.7, 0.1});
  const int y = 1;
  LabeledData batch;
  batch.features = x.reshaped({1, 2});
  batch.labels = {y};
  batch.num_classes = 2;
  auto g = grad_h1(ens, 0, batch);

  // forward by hand
  const double t0 = std::tanh(0.3), t1 = std::tanh(-0.6);
  const double z0 = 0.4, z1 = -0.2;  // constant victim logits
  const double w0 = 0.2 * t0 - 0.1 * t1 + 0.05 + z0;
  const double w1 = 0.5 * t0 + 0.4 * t1 - 0.05 + z1;
  const double m = std::max(w0, w1);
  const double e0 = std::exp(w0 - m), e1 = std::exp(w1 - m);
  const double p0 = e0 / (e0 + e1), p1 = e1 / (e0 + e1);
  const double d0 = p0 - 0.0, d1 = p1 - 1.0;  // dCE/dlogit

  // b2 gradient = p - onehot
  CHECK(g[3][0] == doctest::Approx(d0).epsilon(1e-12));
  CHECK(g[3][1] == doctest::Approx(d1).epsilon(1e-12));
  // W2[i][k] gradient = (p - onehot)_i * hidden_k
  CHECK(g[2].at(0, 0) == doctest::Approx(d0 * t0).epsilon(1e-12));
  CHECK(g[2].at(1, 1) == doctest::Approx(d1 * t1).epsilon(1e-12));
  // b1 gradient flows through W2 and tanh'
  const double gb1_0 = (d0 * 0.2 + d1 * 0.5) * (1 - t0 * t0);
  CHECK(g[1][0] == doctest::Approx(gb1_0).epsilon(1e-12));
  // W1[k][j] gradient = b1 gradient * phi_j (phi = victim logits here)
  CHECK(g[0].at(0, 0) == doctest::Approx(gb1_0 * z0).epsilon(1e-12));
  CHECK(g[0].at(0, 1) == doctest::Approx(gb1_0 * z1).epsilon(1e-12));
}

namespace {

std::vector<Tensor> head_fd(const BbcEnsemble& ens, std::size_t head,
                            const std::function<double(const BbcEnsemble&)>& f) {
  std::vector<Tensor> out;
  BbcEnsemble probe = ens;
  for (std::size_t k = 0; k < 4; ++k) {
    Tensor g(probe.heads[head].params.tensors[k].shape());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      double& w = probe.heads[head].params.tensors[k][i];
      const double orig = w;
      const double h = 1e-5;
      w = orig + h;
      const double fp = f(probe);
      w = orig - h;
      const double fm = f(probe);
      w = orig;
      g[i] = (fp - fm) / (2 * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

TEST_CASE("grad_h1 / grad_h2 / grad_h3 match finite differences") {
  BbcEnsemble ens = make_ensemble(random_victim(21), 1, 5);
  RngStream rng(33);
  for (Eigen::Index i = 0; i < 4; ++i) {
    ens.heads[0].params.tensors[2][i] = rng.uniform(-0.4, 0.4);
    ens.heads[0].params.tensors[3][i % 2] = rng.uniform(-0.2, 0.2);
  }
  LabeledData batch;
  batch.features = Tensor::matrix(3, 2, {0.1, -0.4, 0.8, 0.2, -0.5, 0.6});
  batch.labels = {0, 1, 0};
  batch.num_classes = 2;
  Tensor neg = Tensor::matrix(2, 2, {0.9, -0.1, -0.3, 0.2});

  auto fd1 = head_fd(ens, 0, [&](const BbcEnsemble& e) {
    GradTape t;
    auto logits = t.constant(wrapped_logits(e, 0, batch.features));
    return t.value(tape_cross_entropy_mean(t, logits, batch.labels)).item();
  });
  auto g1 = grad_h1(ens, 0, batch);
  for (int k = 0; k < 4; ++k) CHECK(test::grads_close(g1[k], fd1[k]));

  auto fd2 = head_fd(ens, 0, [&](const BbcEnsemble& e) {
    Tensor zp = wrapped_logits(e, 0, batch.features);
    Tensor zn = wrapped_logits(e, 0, neg);
    return zp.array().mean() - zn.array().mean();
  });
  auto g2 = grad_h2(ens, 0, batch.features, neg, EnergyConvention::kMeanLogit);
  for (int k = 0; k < 4; ++k) CHECK(test::grads_close(g2[k], fd2[k]));

  Tensor x = Tensor::vector({0.15, -0.2});
  Tensor xa = Tensor::vector({0.22, -0.12});
  auto fd3 = head_fd(ens, 0, [&](const BbcEnsemble& e) {
    return wrapped_logits(e, 0, xa)[1];
  });
  auto g3 = grad_h3(ens, 0, x, xa, 1);
  for (int k = 0; k < 4; ++k) CHECK(test::grads_close(g3[k], fd3[k]));
}

TEST_CASE("grad_h2 with identical batches is exactly zero") {
  BbcEnsemble ens = make_ensemble(random_victim(5), 1, 3);
  Tensor batch = Tensor::matrix(2, 2, {0.4, 0.5, -0.2, 0.1});
  auto g = grad_h2(ens, 0, batch, batch, EnergyConvention::kMeanLogit);
  for (const Tensor& t : g) {
    for (Eigen::Index i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0);
  }
}

TEST_CASE("grad_h2 single-pair mean-logit gradient matches the hand form") {
  // W1 = 0: only W2 and b2 see a difference; dU/dW2[i][k] = hidden_k / c and
  // hidden is constant, so the W2/b2 gradients cancel between pos and neg;
  // W1/b1 receive (dU/dhidden) * tanh' * (phi_pos - phi_neg) terms.
  BbcEnsemble ens = make_ensemble(const_victim({0.0, 0.0}), 1, 2);
  AppendedHead& h = ens.heads[0];
  h.params.tensors[0] = Tensor::matrix(2, 2, {0.3, -0.2, 0.1, 0.4});
  h.params.tensors[1] = Tensor::vector({0.0, 0.0});
  h.params.tensors[2] = Tensor::matrix(2, 2, {0.5, 0.1, -0.3, 0.2});
  h.params.tensors[3] = Tensor::vector({0.0, 0.0});
  // constant victim: phi identical for pos and neg -> whole gradient zero
  Tensor pos = Tensor::matrix(1, 2, {0.7, -0.5});
  Tensor neg = Tensor::matrix(1, 2, {-0.3, 0.6});
  auto g = grad_h2(ens, 0, pos, neg, EnergyConvention::kMeanLogit);
  for (const Tensor& t : g) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      CHECK(t[i] == doctest::Approx(0.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("cd gradient matches the 201-point grid enumeration") {
  // 1-D toy EBM: p(x) proportional to exp(U(wrapped(x))) on [-3, 3].
  std::vector<LayerSpec> arch = {{1, 4, Activation::kTanh},
                                 {4, 2, Activation::kIdentity}};
  ParameterSet vp;
  vp.tensors.push_back(Tensor::matrix(4, 1, {0.8, 0.8, 0.8, 0.3}));
  vp.tensors.push_back(Tensor::vector({0.0, -1.0, 1.0, 0.0}));
  vp.tensors.push_back(
      Tensor::matrix(2, 4, {0.9, 0.0, -0.7, 0.0, 0.0, -0.5, 0.0, 0.6}));
  vp.tensors.push_back(Tensor::vector({0.2, -0.1}));
  BbcEnsemble ens =
      make_ensemble(freeze(VictimClassifier(arch, std::move(vp))), 1, 11);
  RngStream hrng(77);
  for (Eigen::Index i = 0; i < 4; ++i) {
    ens.heads[0].params.tensors[2][i] = hrng.uniform(-0.3, 0.3);
  }

  const EnergyConvention conv = EnergyConvention::kMeanLogit;
  WrappedHead model(ens, 0);

  // exact negative phase by grid enumeration
  const int grid_n = 201;
  std::vector<double> u(grid_n);
  std::vector<std::vector<Tensor>> du(grid_n);
  double umax = -1e300;
  for (int i = 0; i < grid_n; ++i) {
    const double xi = -3.0 + 6.0 * i / (grid_n - 1);
    GradTape t;
    TapeParams hp;
    auto logits = model.tape_logits_tracked(
        t, t.constant(Tensor::matrix(1, 1, {xi})), hp);
    auto uid = tape_u_mean(t, logits, conv);
    u[i] = t.value(uid).item();
    umax = std::max(umax, u[i]);
    t.backward(uid);
    du[i] = param_grads(t, hp);
  }
  double z = 0;
  for (int i = 0; i < grid_n; ++i) z += std::exp(u[i] - umax);
  std::vector<Tensor> exact_neg;
  for (std::size_t k = 0; k < 4; ++k) {
    Tensor acc(du[0][k].shape());
    for (int i = 0; i < grid_n; ++i) {
      acc.array() += std::exp(u[i] - umax) / z * du[i][k].array();
    }
    exact_neg.push_back(std::move(acc));
  }

  // positive batch: a few fixed points
  Tensor pos = Tensor::matrix(4, 1, {-1.0, -0.25, 0.5, 1.5});

  // CD estimate: long chains, uniform start, clipped to the interval
  SgldConfig chain;
  chain.steps = 3000;
  chain.step_size = 0.1;
  chain.clip_to_box = true;
  chain.box = {-3.0, 3.0};
  RngStream crng(13, "cd-oracle");
  const Eigen::Index chains = 2048;
  Tensor x0({chains, 1});
  for (Eigen::Index i = 0; i < chains; ++i) x0[i] = crng.uniform(-3, 3);
  Tensor neg = run_energy_chain(std::move(x0), model, conv, chain, crng);
  auto est = grad_h2(ens, 0, pos, neg, conv);

  // exact Eq-form gradient: d mean U(pos) - E_p[dU]
  GradTape t;
  TapeParams hp;
  auto logits = model.tape_logits_tracked(t, t.constant(pos), hp);
  t.backward(tape_u_mean(t, logits, conv));
  auto dpos = param_grads(t, hp);

  double err2 = 0, ref2 = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    Eigen::ArrayXd exact = dpos[k].array() - exact_neg[k].array();
    err2 += (est[k].array() - exact).square().sum();
    ref2 += exact.square().sum();
  }
  CHECK(std::sqrt(err2 / ref2) < 0.1);
}

TEST_CASE("grad_h3 ignores lambda and matches the conditional gradient") {
  BbcEnsemble ens = make_ensemble(random_victim(7), 1, 9);
  Tensor x = Tensor::vector({0.2, 0.3});
  Tensor xa = Tensor::vector({0.25, 0.28});
  auto g = grad_h3(ens, 0, x, xa, 0);
  // finite differences of g(x_adv)[y] - lambda*d for two lambdas agree,
  // since d carries no head dependence
  for (double lambda : {0.0, 5.0}) {
    auto fd = head_fd(ens, 0, [&](const BbcEnsemble& e) {
      return wrapped_logits(e, 0, xa)[0] - lambda * euclidean_sq(x, xa);
    });
    for (int k = 0; k < 4; ++k) CHECK(test::grads_close(g[k], fd[k]));
  }
}

TEST_CASE("grad_h3 is tiny at a saturated correct logit") {
  BbcEnsemble ens = make_ensemble(const_victim({60.0, -60.0}), 1, 4);
  Tensor x = Tensor::vector({0.1, 0.1});
  auto g = grad_h3(ens, 0, x, x, 0);
  // dU = d wrapped[y] / d theta' is not a softmax gradient; with a zero
  // final layer only W2/b2 entries are touched and stay bounded by hidden
  for (const Tensor& t : g) CHECK(t.all_finite());
}

TEST_CASE("train with zero iterations leaves heads unchanged") {
  Dataset ds = gen_data(DatasetKind::kMoons2d, {.n = 60, .noise = 0.1}, 2);
  BbcEnsemble ens = make_ensemble(random_victim(3), 2, 5);
  std::vector<std::uint64_t> before;
  for (const auto& h : ens.heads) before.push_back(params_checksum(h.params));
  BbcTrainConfig cfg;
  cfg.iterations = 0;
  cfg.sgld_data.steps = 2;
  cfg.sgld_adv.steps = 2;
  DistanceFn d = DistanceFn::euclidean_sq();
  train(ens, ds.data, cfg, d);
  for (std::size_t n = 0; n < ens.heads.size(); ++n) {
    CHECK(params_checksum(ens.heads[n].params) == before[n]);
  }
}

TEST_CASE("train keeps the victim bit-identical and is deterministic") {
  Dataset ds = gen_data(DatasetKind::kMoons2d, {.n = 80, .noise = 0.1}, 2);
  TrainConfig vcfg{.epochs = 30, .batch_size = 16, .learning_rate = 0.2, .seed = 3};
  std::vector<LayerSpec> arch = {{2, 16, Activation::kRelu},
                                 {16, 2, Activation::kIdentity}};
  VictimClassifier victim = freeze(train_standard(ds.data, vcfg, arch));
  const auto victim_sum = victim.checksum();

  BbcTrainConfig cfg;
  cfg.iterations = 10;
  cfg.batch_pos = 8;
  cfg.batch_neg = 8;
  cfg.sgld_data.steps = 3;
  cfg.sgld_adv.steps = 3;
  cfg.seed = 17;
  DistanceFn d = DistanceFn::euclidean_sq();

  BbcEnsemble a = make_ensemble(victim, 2, cfg.seed);
  train(a, ds.data, cfg, d);
  CHECK(a.victim.current_checksum() == victim_sum);

  BbcEnsemble b = make_ensemble(victim, 2, cfg.seed);
  train(b, ds.data, cfg, d);
  for (std::size_t n = 0; n < a.heads.size(); ++n) {
    CHECK(params_checksum(a.heads[n].params) ==
          params_checksum(b.heads[n].params));
    // training actually moved the heads
    BbcEnsemble fresh = make_ensemble(victim, 2, cfg.seed);
    CHECK(params_checksum(a.heads[n].params) !=
          params_checksum(fresh.heads[n].params));
  }
}

TEST_CASE("predict_bma with one head equals that head's softmax") {
  BbcEnsemble ens = make_ensemble(random_victim(19), 1, 23);
  Tensor x = Tensor::vector({0.5, -0.5});
  Tensor p = predict_bma(ens, x);
  GradTape t;
  Tensor want = t.value(t.softmax_rows(t.constant(wrapped_logits(ens, 0, x))));
  CHECK(p == want);
}

TEST_CASE("predict_bma over identical heads is bit-identical to one head") {
  BbcEnsemble ens = make_ensemble(random_victim(19), 5, 23);
  for (std::size_t n = 1; n < 5; ++n) ens.heads[n] = ens.heads[0];
  Tensor x = Tensor::vector({0.1, 0.8});
  BbcEnsemble single = make_ensemble(ens.victim, 1, 23);
  single.heads[0] = ens.heads[0];
  CHECK(predict_bma(ens, x) == predict_bma(single, x));
}

TEST_CASE("zero-initialized ensemble predicts exactly like the victim") {
  VictimClassifier victim = random_victim(29);
  BbcEnsemble ens = make_ensemble(victim, 5, 31);
  Tensor x = Tensor::vector({-0.7, 0.45});
  Tensor p = predict_bma(ens, x);
  Tensor want = class_conditional(victim, x);
  CHECK(p == want);
}

TEST_CASE("predict_bma of two distinct heads equals the hand average") {
  BbcEnsemble ens = make_ensemble(random_victim(37), 2, 41);
  RngStream rng(6);
  for (std::size_t n = 0; n < 2; ++n) {
    for (Eigen::Index i = 0; i < 4; ++i) {
      ens.heads[n].params.tensors[2][i] = rng.uniform(-1, 1);
      ens.heads[n].params.tensors[3][i % 2] = rng.uniform(-1, 1);
    }
  }
  Tensor x = Tensor::vector({0.2, 0.9});
  Tensor p = predict_bma(ens, x);
  GradTape t0, t1;
  Tensor p0 = t0.value(t0.softmax_rows(t0.constant(wrapped_logits(ens, 0, x))));
  Tensor p1 = t1.value(t1.softmax_rows(t1.constant(wrapped_logits(ens, 1, x))));
  for (Eigen::Index i = 0; i < 2; ++i) {
    CHECK(p[i] == doctest::Approx(0.5 * (p0[i] + p1[i])).epsilon(1e-14));
  }
}

TEST_CASE("predict_bma stays on the probability simplex") {
  BbcEnsemble ens = make_ensemble(random_victim(43, 3, 4), 3, 47);
  RngStream rng(2);
  for (auto& h : ens.heads) {
    for (Eigen::Index i = 0; i < h.params.tensors[2].size(); ++i) {
      h.params.tensors[2][i] = rng.uniform(-2, 2);
    }
  }
  for (int trial = 0; trial < 25; ++trial) {
    Tensor x({3});
    for (int i = 0; i < 3; ++i) x[i] = rng.uniform(-2, 2);
    Tensor p = predict_bma(ens, x);
    double s = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      CHECK(p[i] >= 0.0);
      s += p[i];
    }
    CHECK(std::abs(s - 1.0) < 1e-10);
  }
}

TEST_CASE("predict_bma is invariant to head order within 1e-12") {
  BbcEnsemble ens = make_ensemble(random_victim(53), 3, 59);
  RngStream rng(3);
  for (auto& h : ens.heads) {
    for (Eigen::Index i = 0; i < 4; ++i) {
      h.params.tensors[2][i] = rng.uniform(-1, 1);
    }
  }
  Tensor x = Tensor::vector({0.3, 0.4});
  Tensor p = predict_bma(ens, x);
  std::swap(ens.heads[0], ens.heads[2]);
  Tensor q = predict_bma(ens, x);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    CHECK(std::abs(p[i] - q[i]) <= 1e-12);
  }
}

TEST_CASE("expected_input_gradient of identical heads equals one head") {
  BbcEnsemble ens = make_ensemble(random_victim(61), 4, 67);
  for (std::size_t n = 1; n < 4; ++n) ens.heads[n] = ens.heads[0];
  Tensor x = Tensor::vector({0.25, -0.6});
  Tensor g4 = expected_input_gradient(ens, x, 1);
  BbcEnsemble single = make_ensemble(ens.victim, 1, 67);
  single.heads[0] = ens.heads[0];
  Tensor g1 = expected_input_gradient(single, x, 1);
  CHECK(g4 == g1);
}

TEST_CASE("expected_input_gradient matches finite differences") {
  BbcEnsemble ens = make_ensemble(random_victim(71), 3, 73);
  RngStream rng(8);
  for (auto& h : ens.heads) {
    for (Eigen::Index i = 0; i < 4; ++i) {
      h.params.tensors[2][i] = rng.uniform(-0.8, 0.8);
    }
  }
  Tensor x = Tensor::vector({0.45, 0.1});
  const int y = 0;
  Tensor got = expected_input_gradient(ens, x, y);
  Tensor fd = test::fd_grad(
      [&](const Tensor& v) {
        double total = 0;
        for (std::size_t n = 0; n < ens.heads.size(); ++n) {
          GradTape t;
          auto logits = t.constant(wrapped_logits(ens, n, v));
          total += t.value(tape_cross_entropy_mean(t, logits, {y})).item();
        }
        return total / static_cast<double>(ens.heads.size());
      },
      x);
  CHECK(test::grads_close(got, fd, 1e-3, 1e-8));
}

TEST_CASE("latent-feature skip mode wires the head to the hidden layer") {
  VictimClassifier victim = random_victim(83);  // tanh hidden width 8
  BbcEnsemble ens =
      make_ensemble(victim, 1, 89, SkipInput::kLatentFeatures);
  CHECK(ens.heads[0].input_width() == 8);
  Tensor x = Tensor::vector({0.3, 0.3});
  // zero final layer: still exactly the victim
  CHECK(wrapped_logits(ens, 0, x) == victim.logits(x));
}
