// Copyright 2026 The Compcap Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <optional>
#include <string>

#include "compcap/model.hpp"
#include "compcap/vocab.hpp"

namespace compcap {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  Vocabulary vocab;
};

/// Layout: "BUTRCKPT", u32 version, u64 header length, JSON header (model
/// config, vocabulary, entry names and shapes), little-endian fp64 payload in
/// entry order, then the 20-byte SHA-1 of everything before it.
std::string serialize_checkpoint(const ModelParams& p, const Vocabulary& vocab);
void save_checkpoint(const std::string& path, const ModelParams& p, const Vocabulary& vocab);

/// The digest is verified before anything is parsed, so a damaged file never
/// yields parameters. When `expected` is given every entry shape is compared
/// against it and all mismatches are reported together.
Checkpoint parse_checkpoint(const std::string& bytes, const std::optional<ModelConfig>& expected = std::nullopt);
Checkpoint load_checkpoint(const std::string& path, const std::optional<ModelConfig>& expected = std::nullopt);

}  // namespace compcap
