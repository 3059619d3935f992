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

#include "bbc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace bbc {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'B', 'B', 'C', '1'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kKindVictim = 1;
constexpr std::uint8_t kKindEnsemble = 2;

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("checkpoint truncated");
  return v;
}

void write_tensor(std::ostream& out, const Tensor& t) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (Eigen::Index d : t.shape()) {
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(d));
  }
  out.write(reinterpret_cast<const char*>(t.array().data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor read_tensor(std::istream& in) {
  const auto rank = read_pod<std::uint32_t>(in);
  if (rank == 0 || rank > 8) throw IoError("checkpoint tensor rank invalid");
  Shape shape;
  for (std::uint32_t i = 0; i < rank; ++i) {
    shape.push_back(static_cast<Eigen::Index>(read_pod<std::uint64_t>(in)));
  }
  Tensor t(shape);
  in.read(reinterpret_cast<char*>(t.array().data()),
          static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!in) throw IoError("checkpoint truncated");
  return t;
}

void write_params(std::ostream& out, const ParameterSet& params) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.count()));
  for (const Tensor& t : params.tensors) write_tensor(out, t);
  write_pod<std::uint64_t>(out, params_checksum(params));
}

ParameterSet read_params(std::istream& in) {
  const auto count = read_pod<std::uint32_t>(in);
  ParameterSet params;
  for (std::uint32_t i = 0; i < count; ++i) {
    params.tensors.push_back(read_tensor(in));
  }
  const auto checksum = read_pod<std::uint64_t>(in);
  if (checksum != params_checksum(params)) {
    throw IoError("checkpoint parameter checksum mismatch");
  }
  return params;
}

void write_victim(std::ostream& out, const VictimClassifier& model) {
  write_pod<std::uint32_t>(out,
                           static_cast<std::uint32_t>(model.arch().size()));
  for (const LayerSpec& l : model.arch()) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(l.in));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(l.out));
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(l.act));
  }
  write_pod<std::uint8_t>(out, model.frozen() ? 1 : 0);
  write_params(out, model.params());
}

VictimClassifier read_victim(std::istream& in) {
  const auto n_layers = read_pod<std::uint32_t>(in);
  if (n_layers == 0 || n_layers > 64) throw IoError("invalid layer count");
  std::vector<LayerSpec> arch;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec l;
    l.in = read_pod<std::uint32_t>(in);
    l.out = read_pod<std::uint32_t>(in);
    const auto act = read_pod<std::uint8_t>(in);
    if (act > 2) throw IoError("invalid activation code");
    l.act = static_cast<Activation>(act);
    arch.push_back(l);
  }
  const bool frozen = read_pod<std::uint8_t>(in) != 0;
  ParameterSet params = read_params(in);
  return VictimClassifier(std::move(arch), std::move(params), frozen);
}

void open_container(std::istream& in, std::uint8_t expected_kind) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a BBC1 checkpoint");
  }
  const auto version = read_pod<std::uint16_t>(in);
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto kind = read_pod<std::uint8_t>(in);
  if (kind != expected_kind) {
    throw IoError("checkpoint holds a different payload kind");
  }
}

}  // namespace

void save_victim(const VictimClassifier& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  write_pod<std::uint16_t>(out, kVersion);
  write_pod<std::uint8_t>(out, kKindVictim);
  write_victim(out, model);
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

VictimClassifier load_victim(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  open_container(in, kKindVictim);
  return read_victim(in);
}

void save_ensemble(const BbcEnsemble& ens, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  write_pod<std::uint16_t>(out, kVersion);
  write_pod<std::uint8_t>(out, kKindEnsemble);
  write_victim(out, ens.victim);
  write_pod<std::uint8_t>(out,
                          ens.skip_input == SkipInput::kVictimLogits ? 0 : 1);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ens.heads.size()));
  for (const AppendedHead& h : ens.heads) {
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(h.hidden_act));
    write_params(out, h.params);
  }
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

BbcEnsemble load_ensemble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  open_container(in, kKindEnsemble);
  BbcEnsemble ens;
  ens.victim = read_victim(in);
  if (!ens.victim.frozen()) {
    throw IoError("ensemble checkpoint requires a frozen victim");
  }
  ens.skip_input = read_pod<std::uint8_t>(in) == 0
                       ? SkipInput::kVictimLogits
                       : SkipInput::kLatentFeatures;
  const auto n_heads = read_pod<std::uint32_t>(in);
  if (n_heads == 0 || n_heads > 1024) throw IoError("invalid head count");
  for (std::uint32_t i = 0; i < n_heads; ++i) {
    AppendedHead h;
    const auto act = read_pod<std::uint8_t>(in);
    if (act > 2) throw IoError("invalid activation code");
    h.hidden_act = static_cast<Activation>(act);
    h.params = read_params(in);
    ens.heads.push_back(std::move(h));
  }
  ens.validate();
  return ens;
}

}  // namespace bbc
