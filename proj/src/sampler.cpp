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

#include "bbc/sampler.hpp"

#include <cmath>

namespace bbc {

void SgldConfig::validate() const {
  if (step_size <= 0) throw ContractError("sgld step_size must be positive");
  if (steps < 0) throw ContractError("sgld steps must be non-negative");
}

Tensor sgld_step(const Tensor& x, const Tensor& grad_logp,
                 const SgldConfig& cfg, RngStream& rng) {
  cfg.validate();
  if (!x.same_shape(grad_logp)) {
    throw DimensionError("sgld_step: gradient shape mismatch");
  }
  grad_logp.ensure_finite("sgld gradient");
  const double eps = cfg.step_size;
  const double noise_scale =
      cfg.noise_scale_override ? *cfg.noise_scale_override : 1.0;
  Tensor out(x.shape());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double v = x[i] + 0.5 * eps * eps * grad_logp[i];
    if (noise_scale != 0.0) v += eps * noise_scale * rng.normal();
    out[i] = v;
  }
  if (cfg.clip_to_box) {
    out.array() = out.array().max(cfg.box.lo).min(cfg.box.hi);
  }
  out.ensure_finite("sgld state");
  return out;
}

namespace {

Tensor perturb_uniform(const Tensor& x, double half_width, RngStream& rng) {
  Tensor out = x;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] += rng.uniform(-half_width, half_width);
  }
  return out;
}

}  // namespace

Tensor run_adv_chain_batch(const Tensor& x_clean,
                           const std::vector<int>& labels,
                           const EnergyView& view, const SgldConfig& cfg,
                           RngStream& rng) {
  cfg.validate();
  view.validate();
  Tensor state = perturb_uniform(x_clean, cfg.init_perturb, rng);
  if (cfg.clip_to_box) {
    state.array() = state.array().max(cfg.box.lo).min(cfg.box.hi);
  }
  for (int step = 0; step < cfg.steps; ++step) {
    GradTape t;
    auto clean = t.constant(x_clean);
    auto adv = t.leaf(state, true);
    t.backward(tape_adv_conditional_sum(view, t, clean, adv, labels));
    state = sgld_step(state, *t.grad(adv), cfg, rng);
  }
  return state;
}

Tensor run_adv_chain(const Tensor& x_clean, int y, const EnergyView& view,
                     const SgldConfig& cfg, RngStream& rng) {
  return run_adv_chain_batch(x_clean, {y}, view, cfg, rng);
}

Tensor run_energy_chain(Tensor x0, const LogitModel& model,
                        EnergyConvention convention, const SgldConfig& cfg,
                        RngStream& rng) {
  cfg.validate();
  Tensor state = std::move(x0);
  for (int step = 0; step < cfg.steps; ++step) {
    GradTape t;
    auto x = t.leaf(state, true);
    t.backward(tape_u_sum(t, model.tape_logits(t, x), convention));
    state = sgld_step(state, *t.grad(x), cfg, rng);
  }
  return state;
}

void PcdBuffer::validate() const {
  if (capacity <= 0) throw ContractError("pcd buffer capacity must be positive");
  if (reinit_prob < 0 || reinit_prob > 1) {
    throw ContractError("pcd reinit probability must be in [0,1]");
  }
  if (sample_shape.empty()) {
    throw ContractError("pcd buffer needs a sample shape");
  }
}

namespace {

Tensor pcd_fresh(const PcdBuffer& buf, RngStream& rng) {
  Tensor x(buf.sample_shape);
  if (buf.init_distribution == PcdBuffer::Init::kUniformBox) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x[i] = rng.uniform(buf.box.lo, buf.box.hi);
    }
  } else {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
  }
  return x;
}

}  // namespace

Tensor pcd_draw(PcdBuffer& buf, RngStream& rng) {
  buf.validate();
  if (buf.stored.empty() || rng.bernoulli(buf.reinit_prob)) {
    return pcd_fresh(buf, rng);
  }
  return buf.stored[rng.uniform_index(buf.stored.size())];
}

void pcd_store(PcdBuffer& buf, Tensor x, RngStream& rng) {
  buf.validate();
  if (static_cast<Eigen::Index>(buf.stored.size()) < buf.capacity) {
    buf.stored.push_back(std::move(x));
    return;
  }
  buf.stored[rng.uniform_index(buf.stored.size())] = std::move(x);
}

void AdaHmcState::validate() const {
  if (sigma <= 0) throw ContractError("adahmc sigma must be positive");
  if (friction <= 0) throw ContractError("adahmc friction must be positive");
  if (tau < 1) throw ContractError("adahmc tau must be at least 1");
  if (inner_steps < 1) throw ContractError("adahmc needs at least one step");
}

void adahmc_step(ParameterSet& theta, const std::vector<Tensor>& h,
                 AdaHmcState& st, RngStream& rng) {
  st.validate();
  if (h.size() != theta.tensors.size()) {
    throw DimensionError("adahmc: gradient count mismatch");
  }
  if (st.precond.empty()) {
    for (const Tensor& t : theta.tensors) {
      st.precond.push_back(Tensor(t.shape(), Eigen::ArrayXd::Ones(t.size())));
    }
  }
  const double s2 = st.sigma * st.sigma;
  const double s3 = s2 * st.sigma;
  const double s4 = s2 * s2;
  for (std::size_t k = 0; k < theta.tensors.size(); ++k) {
    h[k].ensure_finite("adahmc gradient");
    Tensor& w = theta.tensors[k];
    Tensor& c = st.precond[k];
    if (!w.same_shape(h[k]) || !w.same_shape(c)) {
      throw DimensionError("adahmc: tensor shape mismatch");
    }
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double ci = c[i];
      double v = w[i] - s2 * h[k][i] / std::sqrt(ci);
      if (st.noise_scale != 0.0) {
        const double var = std::max(2.0 * st.friction * s3 / ci - s4, 0.0);
        // Floored C entries (dead directions) would otherwise inject noise
        // orders of magnitude above the step scale; cap the std at sigma.
        const double sd = std::min(std::sqrt(var), st.sigma);
        v += st.noise_scale * sd * rng.normal();
      }
      w[i] = v;
    }
    // EMA of squared gradients, floored; runs after the parameter update.
    const double a = 1.0 - 1.0 / st.tau;
    c.array() =
        (a * c.array() + (1.0 / st.tau) * h[k].array().square()).max(1e-8);
    w.ensure_finite("adahmc parameters");
  }
}

}  // namespace bbc
