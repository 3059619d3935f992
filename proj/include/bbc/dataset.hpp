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

#include <cstdint>
#include <optional>
#include <string>

#include "bbc/data.hpp"
#include "bbc/distance.hpp"

namespace bbc {

// Desk-scale stand-in datasets. All float features are normalized into the
// unit box per coordinate group, so attack budgets in data-range units are
// plain absolute numbers.
enum class DatasetKind { kMoons2d, kBlobs2d, kTinyGrid, kMotionProc };

struct DataGenParams {
  Eigen::Index n = 500;  // total sample count
  double noise = 0.1;
  double separation = 0.5;  // moons2d: vertical offset of the second arc
  int classes = 2;           // blobs2d / tinygrid
  Eigen::Index frames = 20;  // motion_proc
  Eigen::Index joints = 5;   // motion_proc
};

struct Dataset {
  DatasetKind kind = DatasetKind::kMoons2d;
  LabeledData data;
  // motion_proc only: rows of data.features are flattened [M, 3J] sequences.
  std::optional<SkeletonTopology> skeleton;
  std::uint64_t seed = 0;

  // Row i as a [M, 3J] sequence (motion datasets only).
  Tensor sequence(Eigen::Index i) const;
};

// Deterministic for a fixed (kind, params, seed).
Dataset gen_data(DatasetKind kind, const DataGenParams& params,
                 std::uint64_t seed);

// CSV with '#'-prefixed metadata header; doubles round-trip exactly.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

DatasetKind dataset_kind_from_string(const std::string& s);
std::string to_string(DatasetKind kind);

}  // namespace bbc
