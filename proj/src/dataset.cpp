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

#include "bbc/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "bbc/rng.hpp"

namespace bbc {

Tensor Dataset::sequence(Eigen::Index i) const {
  if (!skeleton) throw ContractError("not a motion dataset");
  const Eigen::Index m = skeleton->frames;
  const Eigen::Index cols = 3 * skeleton->joints;
  return data.sample(i).reshaped({m, cols});
}

namespace {

// Min/max rescale of every feature column into [0, 1].
void normalize_unit_box(LabeledData& data) {
  const Eigen::Index n = data.features.rows(), d = data.features.cols();
  for (Eigen::Index j = 0; j < d; ++j) {
    double lo = data.features[j], hi = data.features[j];
    for (Eigen::Index i = 1; i < n; ++i) {
      lo = std::min(lo, data.features[i * d + j]);
      hi = std::max(hi, data.features[i * d + j]);
    }
    if (hi <= lo) hi = lo + 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      data.features[i * d + j] = (data.features[i * d + j] - lo) / (hi - lo);
    }
  }
  data.box = {0.0, 1.0};
}

LabeledData gen_moons(Eigen::Index n, double noise, double separation,
                      RngStream& rng) {
  const Eigen::Index n_out = n / 2, n_in = n - n_out;
  LabeledData d;
  d.features = Tensor({n, 2});
  d.num_classes = 2;
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < n_out; ++i, ++row) {
    const double t = std::numbers::pi * static_cast<double>(i) /
                     static_cast<double>(std::max<Eigen::Index>(n_out - 1, 1));
    d.features[row * 2] = std::cos(t) + noise * rng.normal();
    d.features[row * 2 + 1] = std::sin(t) + noise * rng.normal();
    d.labels.push_back(0);
  }
  for (Eigen::Index i = 0; i < n_in; ++i, ++row) {
    const double t = std::numbers::pi * static_cast<double>(i) /
                     static_cast<double>(std::max<Eigen::Index>(n_in - 1, 1));
    d.features[row * 2] = 1.0 - std::cos(t) + noise * rng.normal();
    d.features[row * 2 + 1] = separation - std::sin(t) + noise * rng.normal();
    d.labels.push_back(1);
  }
  normalize_unit_box(d);
  return d;
}

LabeledData gen_blobs(Eigen::Index n, int classes, double noise,
                      RngStream& rng) {
  if (classes < 2) throw ContractError("blobs need at least two classes");
  LabeledData d;
  d.features = Tensor({n, 2});
  d.num_classes = classes;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % classes);
    const double a =
        2.0 * std::numbers::pi * static_cast<double>(c) / classes;
    d.features[i * 2] = std::cos(a) + noise * rng.normal();
    d.features[i * 2 + 1] = std::sin(a) + noise * rng.normal();
    d.labels.push_back(c);
  }
  normalize_unit_box(d);
  return d;
}

// 8x8 glyph templates: bar, pillar, diagonal, box.
double glyph_pixel(int cls, Eigen::Index r, Eigen::Index c) {
  switch (cls) {
    case 0:
      return (r == 3 || r == 4) ? 1.0 : 0.0;
    case 1:
      return (c == 3 || c == 4) ? 1.0 : 0.0;
    case 2:
      return (r == c || r == c + 1) ? 1.0 : 0.0;
    default:
      return (r == 0 || r == 7 || c == 0 || c == 7) ? 1.0 : 0.0;
  }
}

LabeledData gen_tinygrid(Eigen::Index n, int classes, double noise,
                         RngStream& rng) {
  if (classes < 2 || classes > 4) {
    throw ContractError("tinygrid supports 2 to 4 classes");
  }
  LabeledData d;
  d.features = Tensor({n, 64});
  d.num_classes = classes;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int cls = static_cast<int>(i % classes);
    // one-pixel jitter keeps classes overlapping but separable
    const Eigen::Index dr = static_cast<Eigen::Index>(rng.uniform_index(3)) - 1;
    const Eigen::Index dc = static_cast<Eigen::Index>(rng.uniform_index(3)) - 1;
    for (Eigen::Index r = 0; r < 8; ++r) {
      for (Eigen::Index c = 0; c < 8; ++c) {
        const Eigen::Index sr = std::clamp<Eigen::Index>(r + dr, 0, 7);
        const Eigen::Index sc = std::clamp<Eigen::Index>(c + dc, 0, 7);
        double v = 0.8 * glyph_pixel(cls, sr, sc) + noise * rng.normal();
        d.features[i * 64 + r * 8 + c] = std::clamp(v, 0.0, 1.0);
      }
    }
    d.labels.push_back(cls);
  }
  d.box = {0.0, 1.0};
  return d;
}

// Planar forward-kinematics chains; bone lengths are constant within each
// sequence by construction.
LabeledData gen_motion(Eigen::Index n, Eigen::Index frames,
                       Eigen::Index joints, SkeletonTopology& sk,
                       RngStream& rng) {
  if (joints < 2) throw ContractError("motion needs at least two joints");
  sk.joints = joints;
  sk.frames = frames;
  sk.bones.clear();
  for (int j = 0; j + 1 < joints; ++j) sk.bones.emplace_back(j, j + 1);

  const Eigen::Index cols = 3 * joints;
  LabeledData d;
  d.features = Tensor({n, frames * cols});
  d.num_classes = 2;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int cls = static_cast<int>(i % 2);
    const double omega = cls == 0 ? rng.uniform(0.5, 1.0) : rng.uniform(2.0, 3.0);
    const double bone_len = rng.uniform(0.15, 0.25);
    std::vector<double> base(joints), amp(joints), phase(joints);
    for (Eigen::Index j = 0; j < joints; ++j) {
      base[j] = rng.uniform(-0.4, 0.4);
      amp[j] = rng.uniform(0.2, 0.6);
      phase[j] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    for (Eigen::Index m = 0; m < frames; ++m) {
      const double t = static_cast<double>(m) * 0.2;
      double x = 0.02 * t, y = 0.0, heading = 0.0;
      d.features[i * frames * cols + m * cols + 0] = x;
      d.features[i * frames * cols + m * cols + 1] = y;
      d.features[i * frames * cols + m * cols + 2] = 0.0;
      for (Eigen::Index j = 1; j < joints; ++j) {
        heading += base[j] + amp[j] * std::sin(omega * t + phase[j]);
        x += bone_len * std::cos(heading);
        y += bone_len * std::sin(heading);
        d.features[i * frames * cols + m * cols + 3 * j] = x;
        d.features[i * frames * cols + m * cols + 3 * j + 1] = y;
        d.features[i * frames * cols + m * cols + 3 * j + 2] = 0.0;
      }
    }
    d.labels.push_back(cls);
  }
  const double lo = d.features.array().minCoeff();
  const double hi = d.features.array().maxCoeff();
  d.box = {lo, hi};
  return d;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Dataset gen_data(DatasetKind kind, const DataGenParams& params,
                 std::uint64_t seed) {
  if (params.n < 1) throw ContractError("dataset needs at least one sample");
  RngStream rng(seed, "gen-data");
  Dataset ds;
  ds.kind = kind;
  ds.seed = seed;
  switch (kind) {
    case DatasetKind::kMoons2d:
      ds.data = gen_moons(params.n, params.noise, params.separation, rng);
      break;
    case DatasetKind::kBlobs2d:
      ds.data = gen_blobs(params.n, params.classes, params.noise, rng);
      break;
    case DatasetKind::kTinyGrid:
      ds.data = gen_tinygrid(params.n, params.classes, params.noise, rng);
      break;
    case DatasetKind::kMotionProc: {
      SkeletonTopology sk;
      ds.data = gen_motion(params.n, params.frames, params.joints, sk, rng);
      ds.skeleton = std::move(sk);
      break;
    }
  }
  ds.data.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset: " + path);
  out << "# bbc-dataset v1\n";
  out << "# kind=" << to_string(ds.kind) << "\n";
  out << "# num_classes=" << ds.data.num_classes << "\n";
  out << "# dim=" << ds.data.dim() << "\n";
  out << "# box=" << format_double(ds.data.box.lo) << ","
      << format_double(ds.data.box.hi) << "\n";
  out << "# seed=" << ds.seed << "\n";
  if (ds.skeleton) {
    out << "# frames=" << ds.skeleton->frames << "\n";
    out << "# joints=" << ds.skeleton->joints << "\n";
    out << "# bones=";
    for (std::size_t b = 0; b < ds.skeleton->bones.size(); ++b) {
      if (b) out << ";";
      out << ds.skeleton->bones[b].first << "-" << ds.skeleton->bones[b].second;
    }
    out << "\n";
  }
  for (Eigen::Index i = 0; i < ds.data.size(); ++i) {
    out << ds.data.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < ds.data.dim(); ++j) {
      out << "," << format_double(ds.data.features[i * ds.data.dim() + j]);
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing dataset: " + path);
}

namespace {

std::string meta_value(const std::string& line) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) throw IoError("malformed metadata: " + line);
  return line.substr(eq + 1);
}

double parse_double(const std::string& s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc()) throw IoError("malformed number: " + s);
  return v;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset: " + path);
  Dataset ds;
  std::string line;
  Eigen::Index dim = -1;
  std::vector<double> values;
  std::vector<int> labels;
  SkeletonTopology sk;
  bool has_skeleton = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.starts_with("# kind=")) {
        ds.kind = dataset_kind_from_string(meta_value(line));
      } else if (line.starts_with("# num_classes=")) {
        ds.data.num_classes = std::stoi(meta_value(line));
      } else if (line.starts_with("# dim=")) {
        dim = std::stoll(meta_value(line));
      } else if (line.starts_with("# box=")) {
        const std::string v = meta_value(line);
        const auto comma = v.find(',');
        if (comma == std::string::npos) throw IoError("malformed box: " + line);
        ds.data.box.lo = parse_double(v.substr(0, comma));
        ds.data.box.hi = parse_double(v.substr(comma + 1));
      } else if (line.starts_with("# seed=")) {
        ds.seed = std::stoull(meta_value(line));
      } else if (line.starts_with("# frames=")) {
        sk.frames = std::stoll(meta_value(line));
        has_skeleton = true;
      } else if (line.starts_with("# joints=")) {
        sk.joints = std::stoll(meta_value(line));
        has_skeleton = true;
      } else if (line.starts_with("# bones=")) {
        std::istringstream bs(meta_value(line));
        std::string pair;
        while (std::getline(bs, pair, ';')) {
          const auto dash = pair.find('-');
          if (dash == std::string::npos) throw IoError("malformed bone: " + pair);
          sk.bones.emplace_back(std::stoi(pair.substr(0, dash)),
                                std::stoi(pair.substr(dash + 1)));
        }
        has_skeleton = true;
      }
      continue;
    }
    std::istringstream ls(line);
    std::string cell;
    if (!std::getline(ls, cell, ',')) throw IoError("malformed row: " + line);
    labels.push_back(std::stoi(cell));
    while (std::getline(ls, cell, ',')) values.push_back(parse_double(cell));
  }
  if (dim <= 0 || labels.empty()) throw IoError("dataset has no samples");
  const Eigen::Index n = static_cast<Eigen::Index>(labels.size());
  if (static_cast<Eigen::Index>(values.size()) != n * dim) {
    throw IoError("dataset row width does not match dim");
  }
  ds.data.features = Tensor({n, dim});
  for (std::size_t i = 0; i < values.size(); ++i) {
    ds.data.features[static_cast<Eigen::Index>(i)] = values[i];
  }
  ds.data.labels = std::move(labels);
  if (has_skeleton) {
    sk.validate();
    ds.skeleton = std::move(sk);
  }
  ds.data.validate();
  return ds;
}

DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "moons2d") return DatasetKind::kMoons2d;
  if (s == "blobs2d") return DatasetKind::kBlobs2d;
  if (s == "tinygrid") return DatasetKind::kTinyGrid;
  if (s == "motion_proc") return DatasetKind::kMotionProc;
  throw ConfigError("unknown dataset kind: " + s);
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kMoons2d:
      return "moons2d";
    case DatasetKind::kBlobs2d:
      return "blobs2d";
    case DatasetKind::kTinyGrid:
      return "tinygrid";
    case DatasetKind::kMotionProc:
      return "motion_proc";
  }
  throw ContractError("unknown dataset kind");
}

}  // namespace bbc
