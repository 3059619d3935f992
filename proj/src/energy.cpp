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

#include "bbc/energy.hpp"

namespace bbc {

GradTape::NodeId tape_u_sum(GradTape& tape, GradTape::NodeId logits,
                            EnergyConvention convention) {
  switch (convention) {
    case EnergyConvention::kMeanLogit:
      return tape.sum(tape.row_mean(logits));
    case EnergyConvention::kLogSumExp:
      return tape.sum(tape.row_logsumexp(logits));
  }
  throw ContractError("unknown energy convention");
}

GradTape::NodeId tape_u_mean(GradTape& tape, GradTape::NodeId logits,
                             EnergyConvention convention) {
  const double inv = 1.0 / static_cast<double>(tape.value(logits).rows());
  return tape.scale(tape_u_sum(tape, logits, convention), inv);
}

void EnergyView::validate() const {
  if (!model) throw ContractError("energy view has no model");
  if (!distance) throw ContractError("energy view has no distance");
  if (lambda < 0) throw ContractError("lambda must be non-negative");
}

double data_energy(const LogitModel& model, const Tensor& x) {
  Tensor z = model.logits(x);
  return -logsumexp(z, z.rank() == 1 ? 0 : 1).item();
}

Tensor class_conditional(const LogitModel& model, const Tensor& x) {
  GradTape t;
  return t.value(t.softmax_rows(t.constant(model.logits(x))));
}

namespace {

double picked_logit(const LogitModel& model, const Tensor& x, int y) {
  if (x.rank() == 2 && x.dim(0) != 1) {
    throw ContractError("joint densities take single samples");
  }
  if (y < 0 || y >= model.num_classes()) {
    throw ContractError("label out of range");
  }
  return model.logits(x)[y];
}

}  // namespace

double joint_logdensity_unnorm(const EnergyView& view, const Tensor& x,
                               const Tensor& x_adv, int y) {
  view.validate();
  return picked_logit(*view.model, x, y) +
         adv_conditional_logdensity(view, x, x_adv, y);
}

double adv_conditional_logdensity(const EnergyView& view, const Tensor& x,
                                  const Tensor& x_adv, int y) {
  view.validate();
  if (!x.same_shape(x_adv)) {
    throw DimensionError("clean and adversarial samples differ in shape");
  }
  return picked_logit(*view.model, x_adv, y) -
         view.lambda * (*view.distance)(x, x_adv);
}

GradTape::NodeId tape_adv_conditional_sum(const EnergyView& view,
                                          GradTape& tape,
                                          GradTape::NodeId x_clean,
                                          GradTape::NodeId x_adv,
                                          const std::vector<int>& labels) {
  view.validate();
  GradTape::NodeId z = view.model->tape_logits(tape, x_adv);
  GradTape::NodeId picked = tape.sum(tape.pick(z, labels));
  if (view.lambda == 0.0) return picked;
  GradTape::NodeId d = view.distance->tape_eval(tape, x_clean, x_adv);
  return tape.add_scaled(picked, d, -view.lambda);
}

}  // namespace bbc
