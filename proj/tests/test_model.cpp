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

#include "bbc/model.hpp"

#include <doctest.h>

#include "bbc/dataset.hpp"

using namespace bbc;

namespace {

std::vector<LayerSpec> small_arch(Eigen::Index in, Eigen::Index out) {
  return {{in, 16, Activation::kRelu}, {16, out, Activation::kIdentity}};
}

double dataset_ce(const VictimClassifier& m, const LabeledData& data) {
  GradTape t;
  auto logits = t.constant(m.logits(data.features));
  return t.value(tape_cross_entropy_mean(t, logits, data.labels)).item();
}

}  // namespace

TEST_CASE("standard training separates 2-class blobs") {
  Dataset ds = gen_data(DatasetKind::kBlobs2d, {.n = 200, .noise = 0.08}, 7);
  TrainConfig cfg{.epochs = 50, .batch_size = 16, .learning_rate = 0.2, .seed = 7};
  VictimClassifier m = train_standard(ds.data, cfg, small_arch(2, 2));
  CHECK(accuracy(m, ds.data) >= 0.99);
}

TEST_CASE("loss decreases over the first epoch on separable data") {
  Dataset ds = gen_data(DatasetKind::kBlobs2d, {.n = 200, .noise = 0.05}, 7);
  TrainConfig zero{.epochs = 0, .batch_size = 16, .learning_rate = 0.2, .seed = 3};
  TrainConfig one = zero;
  one.epochs = 1;
  VictimClassifier before = train_standard(ds.data, zero, small_arch(2, 2));
  VictimClassifier after = train_standard(ds.data, one, small_arch(2, 2));
  CHECK(dataset_ce(after, ds.data) < dataset_ce(before, ds.data));
}

TEST_CASE("single-sample dataset is memorized") {
  LabeledData d;
  d.features = Tensor::matrix(1, 2, {0.3, 0.7});
  d.labels = {1};
  d.num_classes = 2;
  TrainConfig cfg{.epochs = 50, .batch_size = 1, .learning_rate = 0.2, .seed = 1};
  VictimClassifier m = train_standard(d, cfg, small_arch(2, 2));
  CHECK(accuracy(m, d) == 1.0);
}

TEST_CASE("two-moons victim reaches 97% train accuracy") {
  Dataset ds = gen_data(DatasetKind::kMoons2d, {.n = 500, .noise = 0.1}, 1);
  TrainConfig cfg{.epochs = 200, .batch_size = 32, .learning_rate = 0.25, .seed = 11};
  std::vector<LayerSpec> arch = {{2, 32, Activation::kRelu},
                                 {32, 32, Activation::kRelu},
                                 {32, 2, Activation::kIdentity}};
  VictimClassifier m = train_standard(ds.data, cfg, arch);
  CHECK(accuracy(m, ds.data) >= 0.97);
}

TEST_CASE("empty dataset is rejected") {
  LabeledData d;
  d.features = Tensor({1, 2});
  d.labels = {};
  d.num_classes = 2;
  TrainConfig cfg;
  CHECK_THROWS_AS(train_standard(d, cfg, small_arch(2, 2)), ContractError);
}

TEST_CASE("training is deterministic in data, config and seed") {
  Dataset ds = gen_data(DatasetKind::kMoons2d, {.n = 100, .noise = 0.1}, 5);
  TrainConfig cfg{.epochs = 5, .batch_size = 16, .learning_rate = 0.1, .seed = 9};
  VictimClassifier a = train_standard(ds.data, cfg, small_arch(2, 2));
  VictimClassifier b = train_standard(ds.data, cfg, small_arch(2, 2));
  CHECK(params_checksum(a.params()) == params_checksum(b.params()));
}

TEST_CASE("energy pretraining rejects zero-length chains") {
  Dataset ds = gen_data(DatasetKind::kMoons2d, {.n = 50, .noise = 0.1}, 5);
  TrainConfig cfg{.epochs = 1, .batch_size = 16, .learning_rate = 0.05, .seed = 2};
  cfg.mode = TrainMode::kEnergyJoint;
  SgldConfig sampler;
  sampler.steps = 0;
  CHECK_THROWS_AS(pretrain_energy_joint(ds.data, cfg, sampler, small_arch(2, 2)),
                  ContractError);
}

TEST_CASE("energy pretraining aborts on divergence") {
  Dataset ds = gen_data(DatasetKind::kMoons2d, {.n = 50, .noise = 0.1}, 5);
  TrainConfig cfg{.epochs = 3, .batch_size = 16, .learning_rate = 0.05, .seed = 2};
  cfg.mode = TrainMode::kEnergyJoint;
  cfg.divergence_limit = 1e-9;  // trips immediately
  SgldConfig sampler;
  sampler.steps = 2;
  sampler.step_size = 0.05;
  CHECK_THROWS_AS(pretrain_energy_joint(ds.data, cfg, sampler, small_arch(2, 2)),
                  NumericError);
}

TEST_CASE("identical positive and negative batches cancel exactly") {
  Dataset ds = gen_data(DatasetKind::kMoons2d, {.n = 32, .noise = 0.1}, 5);
  RngStream rng(1);
  auto arch = small_arch(2, 2);
  ParameterSet params = init_mlp_params(arch, rng);
  GradTape t;
  TapeParams p = add_params(t, params, true);
  auto pos = tape_mlp(t, p, t.constant(ds.data.features), arch);
  auto neg = tape_mlp(t, p, t.constant(ds.data.features), arch);
  auto gap = t.sub(tape_u_mean(t, pos, EnergyConvention::kMeanLogit),
                   tape_u_mean(t, neg, EnergyConvention::kMeanLogit));
  t.backward(gap);
  for (auto id : p.ids) {
    Tensor g = *t.grad(id);
    for (Eigen::Index i = 0; i < g.size(); ++i) CHECK(g[i] == 0.0);
  }
}

TEST_CASE("energy pretraining tracks standard accuracy on two-moons") {
  Dataset ds = gen_data(DatasetKind::kMoons2d, {.n = 300, .noise = 0.1}, 1);
  std::vector<LayerSpec> arch = {{2, 32, Activation::kRelu},
                                 {32, 32, Activation::kRelu},
                                 {32, 2, Activation::kIdentity}};
  TrainConfig std_cfg{.epochs = 200, .batch_size = 32, .learning_rate = 0.2, .seed = 3};
  VictimClassifier std_model = train_standard(ds.data, std_cfg, arch);

  TrainConfig jem_cfg = std_cfg;
  jem_cfg.mode = TrainMode::kEnergyJoint;
  jem_cfg.learning_rate = 0.1;
  SgldConfig sampler;
  sampler.steps = 20;
  sampler.step_size = 0.05;
  sampler.clip_to_box = true;
  sampler.box = ds.data.box;
  VictimClassifier jem = pretrain_energy_joint(ds.data, jem_cfg, sampler, arch);

  const double std_acc = accuracy(std_model, ds.data);
  const double jem_acc = accuracy(jem, ds.data);
  CHECK(jem_acc >= 0.92);
  CHECK(jem_acc >= std_acc - 0.05);
}

TEST_CASE("freeze pins the checksum and is idempotent") {
  Dataset ds = gen_data(DatasetKind::kBlobs2d, {.n = 60, .noise = 0.05}, 2);
  TrainConfig cfg{.epochs = 3, .batch_size = 16, .learning_rate = 0.1, .seed = 4};
  VictimClassifier m = train_standard(ds.data, cfg, small_arch(2, 2));
  CHECK_FALSE(m.frozen());
  m.freeze();
  CHECK(m.frozen());
  const auto sum = m.checksum();
  CHECK(sum == m.current_checksum());
  m.freeze();  // idempotent
  CHECK(m.checksum() == sum);
  CHECK_THROWS_AS(m.set_params(m.params()), ContractError);
}
