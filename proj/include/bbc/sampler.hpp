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

#include <optional>

#include "bbc/data.hpp"
#include "bbc/energy.hpp"
#include "bbc/rng.hpp"

namespace bbc {

// Langevin chain settings. One config describes one kind of chain (data
// chains and adversarial chains in training carry separate configs).
struct SgldConfig {
  double step_size = 0.05;  // epsilon in the update rule
  int steps = 20;
  // Test hook: scales the injected noise; 0 makes the chain deterministic.
  std::optional<double> noise_scale_override;
  // Uniform half-width of the initial perturbation of adversarial chains.
  double init_perturb = 0.05;
  // Optional clamp of chain states to the data box after every step.
  bool clip_to_box = false;
  DataBox box;

  void validate() const;
};

// One Langevin step: x + (eps^2/2) * grad_logp + eps * N(0, I).
Tensor sgld_step(const Tensor& x, const Tensor& grad_logp,
                 const SgldConfig& cfg, RngStream& rng);

// Samples an adversary for (x_clean, y): the chain starts at x_clean plus a
// uniform perturbation of half-width cfg.init_perturb and ascends the
// adversarial conditional log density g(x~)[y] - lambda*d(x, x~).
Tensor run_adv_chain(const Tensor& x_clean, int y, const EnergyView& view,
                     const SgldConfig& cfg, RngStream& rng);

// Row-batched variant; chains for all rows run in lockstep on one tape.
Tensor run_adv_chain_batch(const Tensor& x_clean,
                           const std::vector<int>& labels,
                           const EnergyView& view, const SgldConfig& cfg,
                           RngStream& rng);

// Negative-phase chain ascending the per-row U(g(x)) summary; used by the
// contrastive gradient and energy pretraining. Rows evolve independently.
Tensor run_energy_chain(Tensor x0, const LogitModel& model,
                        EnergyConvention convention, const SgldConfig& cfg,
                        RngStream& rng);

// Replay buffer for persistent contrastive divergence. Draws return a fresh
// initialization with probability reinit_prob, otherwise a stored chain
// state chosen uniformly at random.
struct PcdBuffer {
  enum class Init { kUniformBox, kGaussian };

  Eigen::Index capacity = 128;
  double reinit_prob = 0.05;
  Init init_distribution = Init::kUniformBox;
  Shape sample_shape;
  DataBox box;

  std::vector<Tensor> stored;

  void validate() const;
};

Tensor pcd_draw(PcdBuffer& buf, RngStream& rng);
void pcd_store(PcdBuffer& buf, Tensor x, RngStream& rng);

// Preconditioned stochastic-gradient HMC state. The preconditioner C is a
// per-parameter exponential moving average of squared gradients, floored at
// 1e-8; it starts at 1.
struct AdaHmcState {
  double sigma = 0.05;    // step size
  double friction = 1.0;  // F
  double tau = 1000.0;    // EMA horizon for C
  int inner_steps = 1;    // M_theta' updates per gradient
  double noise_scale = 1.0;  // test hook; 0 disables injected noise

  std::vector<Tensor> precond;  // lazily sized to match the parameters

  void validate() const;
};

// One update of theta in place:
//   theta <- theta - sigma^2 * C^{-1/2} * h + N(0, max(2*F*sigma^3/C - sigma^4, 0))
// followed by C <- (1 - 1/tau) * C + (1/tau) * h^2 (then floored).
void adahmc_step(ParameterSet& theta, const std::vector<Tensor>& h,
                 AdaHmcState& st, RngStream& rng);

}  // namespace bbc
