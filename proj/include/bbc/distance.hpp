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
#include <string>
#include <utility>
#include <vector>

#include "bbc/net.hpp"
#include "bbc/tape.hpp"

namespace bbc {

enum class DistanceKind { kEuclideanSq, kPerceptual, kMotionManifold };

// Frozen feature network for the perceptual distance. Activations are tapped
// after the listed layers, channel-normalized per spatial position, scaled by
// 1/sqrt(W*H) and compared under a weighted squared L2.
struct FeatureExtractor {
  std::vector<LayerSpec> arch;
  ParameterSet params;

  struct LayerDims {
    Eigen::Index width = 1;
    Eigen::Index height = 1;
    Eigen::Index channels = 0;
  };

  std::vector<int> tap_layers;
  std::vector<double> layer_weights;  // empty -> uniform 1/L
  std::vector<LayerDims> layer_dims;  // empty -> W=H=1, C=layer width

  void validate() const;
  // Effective per-layer weight (defaulting applied).
  double weight(std::size_t tap) const;
  LayerDims dims(std::size_t tap) const;
};

// Joint/bone structure of a skeleton sequence. Sequences are [M, 3J] tensors:
// frame-major rows, xyz triples per joint.
struct SkeletonTopology {
  Eigen::Index joints = 0;
  Eigen::Index frames = 0;
  std::vector<std::pair<int, int>> bones;  // (parent, child)

  void validate() const;
  Eigen::Index bone_count() const {
    return static_cast<Eigen::Index>(bones.size());
  }

  // Structured text format: "joints N", "frames M", then "bone P C" lines.
  static SkeletonTopology load(const std::string& path);
  void save(const std::string& path) const;
};

// Pluggable distance d(x, x_adv) between a clean sample and its adversary.
class DistanceFn {
 public:
  static DistanceFn euclidean_sq();
  static DistanceFn perceptual(FeatureExtractor fe);
  static DistanceFn motion_manifold(SkeletonTopology sk);

  DistanceKind kind() const { return kind_; }

  // Distance between two samples of identical shape. For kMotionManifold both
  // tensors are single [M, 3J] sequences.
  double operator()(const Tensor& x, const Tensor& x_adv) const;

  // Records the distance on a tape. For kEuclideanSq and kPerceptual, rank-2
  // inputs are treated as row batches and the node holds the total over rows
  // (per-row gradients decouple). For kMotionManifold the input is one
  // sequence.
  GradTape::NodeId tape_eval(GradTape& tape, GradTape::NodeId x,
                             GradTape::NodeId x_adv) const;

  const FeatureExtractor* extractor() const {
    return extractor_ ? &*extractor_ : nullptr;
  }
  const SkeletonTopology* skeleton() const {
    return skeleton_ ? &*skeleton_ : nullptr;
  }

 private:
  DistanceKind kind_ = DistanceKind::kEuclideanSq;
  std::optional<FeatureExtractor> extractor_;
  std::optional<SkeletonTopology> skeleton_;
};

// The three instantiations, directly callable.
double euclidean_sq(const Tensor& x, const Tensor& x_adv);
double perceptual(const Tensor& x, const Tensor& x_adv,
                  const FeatureExtractor& fe);
double motion_manifold(const Tensor& x, const Tensor& x_adv,
                       const SkeletonTopology& sk);

// k-th forward difference over frames with the last row repeated, so the
// result keeps the [M, 3J] shape. Exposed for tests.
Tensor frame_difference(const Tensor& seq);

}  // namespace bbc
