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
#include <random>
#include <string_view>
#include <vector>

namespace bbc {

// FNV-1a 64-bit hash, also used for parameter checksums in checkpoints.
std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t seed = 0xcbf29ce484222325ull);

// Derives the seed of a named RNG stream from the root seed. Every random
// draw in the library comes from a stream created this way, so a single
// 64-bit root seed pins the whole pipeline:
//
//   stream_seed = splitmix64(root ^ fnv1a64(component) ^ mix(index))
std::uint64_t stream_seed(std::uint64_t root_seed, std::string_view component,
                          std::uint64_t index = 0);

// One independent random stream. Gaussian draws use Box-Muller on the raw
// mt19937_64 output so results do not depend on the standard library's
// distribution implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  RngStream(std::uint64_t root_seed, std::string_view component,
            std::uint64_t index = 0)
      : gen_(stream_seed(root_seed, component, index)) {}

  // Uniform in [0, 1).
  double uniform01();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Standard normal.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);

  bool bernoulli(double p) { return uniform01() < p; }

  // Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace bbc
