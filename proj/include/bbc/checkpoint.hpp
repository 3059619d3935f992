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

#include <string>

#include "bbc/defense.hpp"

namespace bbc {

// Binary "BBC1" container, little-endian throughout:
//   magic "BBC1", u16 format version, u8 payload kind (victim / ensemble),
//   then the victim block (arch descriptor, frozen flag, parameter tensors
//   as shape + raw f64 data, FNV-1a 64 checksum over the parameter bytes),
//   and for ensembles the head blocks (skip mode, activation, per-head
//   tensors + checksum).
void save_victim(const VictimClassifier& model, const std::string& path);
VictimClassifier load_victim(const std::string& path);

void save_ensemble(const BbcEnsemble& ens, const std::string& path);
BbcEnsemble load_ensemble(const std::string& path);

}  // namespace bbc
