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

#include "bbc/distance.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace bbc {

void FeatureExtractor::validate() const {
  validate_arch(arch);
  if (params.count() != static_cast<Eigen::Index>(arch.size()) * 2) {
    throw ContractError("feature extractor parameters do not match arch");
  }
  if (tap_layers.empty()) {
    throw ConfigError("feature extractor needs at least one tapped layer");
  }
  for (int l : tap_layers) {
    if (l < 0 || l >= static_cast<int>(arch.size())) {
      throw ConfigError("tapped layer index out of range");
    }
  }
  if (!layer_weights.empty() && layer_weights.size() != tap_layers.size()) {
    throw ConfigError("one weight per tapped layer required");
  }
  for (double w : layer_weights) {
    if (w < 0) throw ConfigError("layer weights must be non-negative");
  }
  if (!layer_dims.empty()) {
    if (layer_dims.size() != tap_layers.size()) {
      throw ConfigError("one (W,H,C) triple per tapped layer required");
    }
    for (std::size_t i = 0; i < layer_dims.size(); ++i) {
      const LayerDims& d = layer_dims[i];
      if (d.width * d.height * d.channels !=
          arch[static_cast<std::size_t>(tap_layers[i])].out) {
        throw ConfigError("W*H*C must equal the tapped layer width");
      }
    }
  }
}

double FeatureExtractor::weight(std::size_t tap) const {
  if (layer_weights.empty()) {
    return 1.0 / static_cast<double>(tap_layers.size());
  }
  return layer_weights[tap];
}

FeatureExtractor::LayerDims FeatureExtractor::dims(std::size_t tap) const {
  if (layer_dims.empty()) {
    LayerDims d;
    d.channels = arch[static_cast<std::size_t>(tap_layers[tap])].out;
    return d;
  }
  return layer_dims[tap];
}

void SkeletonTopology::validate() const {
  if (joints <= 0 || frames <= 0) {
    throw ContractError("skeleton needs positive joint and frame counts");
  }
  if (bones.empty()) throw ContractError("skeleton needs at least one bone");
  for (auto [p, c] : bones) {
    if (p < 0 || c < 0 || p >= joints || c >= joints || p == c) {
      throw ContractError("bone references invalid joints");
    }
  }
}

SkeletonTopology SkeletonTopology::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open skeleton file: " + path);
  SkeletonTopology sk;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "joints") {
      ls >> sk.joints;
    } else if (key == "frames") {
      ls >> sk.frames;
    } else if (key == "bone") {
      int p = -1, c = -1;
      ls >> p >> c;
      sk.bones.emplace_back(p, c);
    } else if (!key.empty()) {
      throw IoError("unknown skeleton entry: " + key);
    }
    if (ls.fail()) throw IoError("malformed skeleton line: " + line);
  }
  sk.validate();
  return sk;
}

void SkeletonTopology::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write skeleton file: " + path);
  out << "joints " << joints << "\n";
  out << "frames " << frames << "\n";
  for (auto [p, c] : bones) out << "bone " << p << " " << c << "\n";
}

DistanceFn DistanceFn::euclidean_sq() {
  DistanceFn d;
  d.kind_ = DistanceKind::kEuclideanSq;
  return d;
}

DistanceFn DistanceFn::perceptual(FeatureExtractor fe) {
  fe.validate();
  DistanceFn d;
  d.kind_ = DistanceKind::kPerceptual;
  d.extractor_ = std::move(fe);
  return d;
}

DistanceFn DistanceFn::motion_manifold(SkeletonTopology sk) {
  sk.validate();
  DistanceFn d;
  d.kind_ = DistanceKind::kMotionManifold;
  d.skeleton_ = std::move(sk);
  return d;
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("distance inputs differ in shape: " + a.shape_str() +
                         " vs " + b.shape_str());
  }
}

// Channel-normalized, size-scaled feature stack difference (one tapped layer).
GradTape::NodeId perceptual_layer_term(GradTape& t, const FeatureExtractor& fe,
                                       std::size_t tap, GradTape::NodeId act_x,
                                       GradTape::NodeId act_adv) {
  const auto d = fe.dims(tap);
  const Eigen::Index positions =
      t.value(act_x).size() / (d.width * d.height * d.channels) * d.width *
      d.height;
  auto nx = t.normalize_rows(t.reshape(act_x, {positions, d.channels}), 1e-12);
  auto na =
      t.normalize_rows(t.reshape(act_adv, {positions, d.channels}), 1e-12);
  const double scale =
      fe.weight(tap) / static_cast<double>(d.width * d.height);
  return t.scale(t.sum_sq_diff(nx, na), scale);
}

GradTape::NodeId tape_perceptual(GradTape& t, const FeatureExtractor& fe,
                                 GradTape::NodeId x, GradTape::NodeId x_adv) {
  TapeParams p = add_params(t, fe.params, false);
  auto layers_x = tape_mlp_layers(t, p, x, fe.arch);
  auto layers_adv = tape_mlp_layers(t, p, x_adv, fe.arch);
  GradTape::NodeId total = -1;
  for (std::size_t tap = 0; tap < fe.tap_layers.size(); ++tap) {
    const auto l = static_cast<std::size_t>(fe.tap_layers[tap]);
    auto term = perceptual_layer_term(t, fe, tap, layers_x[l], layers_adv[l]);
    total = (total < 0) ? term : t.add(total, term);
  }
  return total;
}

// Indices of the k-th and (k+1 clamped) frames for forward differences with
// the last derivative repeated.
std::vector<Eigen::Index> frame_rows(Eigen::Index frames, Eigen::Index cols,
                                     bool next) {
  std::vector<Eigen::Index> idx;
  idx.reserve(frames * cols);
  for (Eigen::Index m = 0; m < frames; ++m) {
    Eigen::Index base = next ? std::min(m + 1, frames - 1) : std::min(m, frames - 2);
    if (frames == 1) base = 0;
    for (Eigen::Index c = 0; c < cols; ++c) idx.push_back(base * cols + c);
  }
  return idx;
}

GradTape::NodeId tape_frame_diff(GradTape& t, GradTape::NodeId seq,
                                 Eigen::Index frames, Eigen::Index cols) {
  auto hi = t.gather(seq, frame_rows(frames, cols, true), {frames, cols});
  auto lo = t.gather(seq, frame_rows(frames, cols, false), {frames, cols});
  return t.sub(hi, lo);
}

// Bone lengths of every frame: [M*B] vector of 3-D segment norms.
GradTape::NodeId tape_bone_lengths(GradTape& t, GradTape::NodeId seq,
                                   const SkeletonTopology& sk) {
  const Eigen::Index cols = 3 * sk.joints;
  std::vector<Eigen::Index> child, parent;
  child.reserve(sk.frames * sk.bone_count() * 3);
  parent.reserve(child.capacity());
  for (Eigen::Index m = 0; m < sk.frames; ++m) {
    for (auto [p, c] : sk.bones) {
      for (Eigen::Index k = 0; k < 3; ++k) {
        child.push_back(m * cols + 3 * c + k);
        parent.push_back(m * cols + 3 * p + k);
      }
    }
  }
  const Eigen::Index segs = sk.frames * sk.bone_count();
  auto delta = t.sub(t.gather(seq, child, {segs, 3}),
                     t.gather(seq, parent, {segs, 3}));
  return t.sqrt_guarded(t.row_sum(t.square(delta)));
}

GradTape::NodeId tape_motion(GradTape& t, const SkeletonTopology& sk,
                             GradTape::NodeId x, GradTape::NodeId x_adv) {
  const Tensor& xv = t.value(x);
  if (xv.rank() != 2 || xv.dim(0) != sk.frames || xv.dim(1) != 3 * sk.joints) {
    throw DimensionError("motion sequence must be [frames, 3*joints], got " +
                         xv.shape_str());
  }
  const Eigen::Index cols = 3 * sk.joints;
  const double inv_mj = 1.0 / static_cast<double>(sk.frames * sk.joints);
  const double inv_mb =
      1.0 / static_cast<double>(sk.frames * sk.bone_count());

  auto bones = t.scale(t.sum_sq_diff(tape_bone_lengths(t, x, sk),
                                     tape_bone_lengths(t, x_adv, sk)),
                       inv_mb);

  // Derivative orders 0..2: position, velocity, acceleration.
  auto q_x = x;
  auto q_adv = x_adv;
  auto motion = t.sum_sq_diff(q_x, q_adv);
  for (int k = 1; k <= 2; ++k) {
    q_x = tape_frame_diff(t, q_x, sk.frames, cols);
    q_adv = tape_frame_diff(t, q_adv, sk.frames, cols);
    motion = t.add(motion, t.sum_sq_diff(q_x, q_adv));
  }
  return t.add(bones, t.scale(motion, inv_mj));
}

}  // namespace

GradTape::NodeId DistanceFn::tape_eval(GradTape& tape, GradTape::NodeId x,
                                       GradTape::NodeId x_adv) const {
  check_same_shape(tape.value(x), tape.value(x_adv));
  switch (kind_) {
    case DistanceKind::kEuclideanSq:
      return tape.sum_sq_diff(x, x_adv);
    case DistanceKind::kPerceptual:
      if (!extractor_) throw ConfigError("perceptual distance needs an extractor");
      return tape_perceptual(tape, *extractor_, x, x_adv);
    case DistanceKind::kMotionManifold:
      if (!skeleton_) throw ConfigError("motion distance needs a skeleton");
      return tape_motion(tape, *skeleton_, x, x_adv);
  }
  throw ContractError("unknown distance kind");
}

double DistanceFn::operator()(const Tensor& x, const Tensor& x_adv) const {
  GradTape t;
  return t.value(tape_eval(t, t.constant(x), t.constant(x_adv))).item();
}

double euclidean_sq(const Tensor& x, const Tensor& x_adv) {
  check_same_shape(x, x_adv);
  return (x.array() - x_adv.array()).square().sum();
}

double perceptual(const Tensor& x, const Tensor& x_adv,
                  const FeatureExtractor& fe) {
  return DistanceFn::perceptual(fe)(x, x_adv);
}

double motion_manifold(const Tensor& x, const Tensor& x_adv,
                       const SkeletonTopology& sk) {
  return DistanceFn::motion_manifold(sk)(x, x_adv);
}

Tensor frame_difference(const Tensor& seq) {
  if (seq.rank() != 2) throw DimensionError("frame_difference needs [M, d]");
  const Eigen::Index m = seq.dim(0), d = seq.dim(1);
  Tensor out({m, d});
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index hi = (m == 1) ? 0 : std::min(i + 1, m - 1);
    const Eigen::Index lo = (m == 1) ? 0 : std::min(i, m - 2);
    for (Eigen::Index j = 0; j < d; ++j) {
      out[i * d + j] = seq[hi * d + j] - seq[lo * d + j];
    }
  }
  return out;
}

}  // namespace bbc
