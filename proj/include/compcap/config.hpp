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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "compcap/decoding.hpp"
#include "compcap/model.hpp"
#include "compcap/scenes.hpp"
#include "compcap/training.hpp"

namespace compcap {

/// Everything one run-all execution needs. The profile picks the defaults;
/// individual keys in a config file override them.
struct ExperimentConfig {
  std::string profile = "toy";
  std::size_t scenes = 2000;
  GenConfig gen;
  ModelConfig model;
  TrainConfig train;
  DecodeConfig decode;

  std::size_t groups = 4;
  double val_fraction = 0.05;
  bool baseline = true;  // also train the generation-only model

  std::size_t recall_k = 5;
  std::size_t distractor_scenes = 1000;
  std::size_t distractors = 95;
  std::size_t seg_len = 100;

  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string out_dir = "runs";

  void validate() const;

  static ExperimentConfig defaults(const std::string& profile);
};

/// Parses `key = value` lines grouped in `[section]` blocks, with `#`
/// comments and `[a, b]` lists. A top-level `profile` key selects the
/// defaults before the other keys are applied. Unknown keys, bad values and
/// unknown profiles raise ConfigError.
ExperimentConfig parse_config(std::istream& is, const std::optional<std::string>& profile = std::nullopt);
ExperimentConfig load_config(const std::string& path, const std::optional<std::string>& profile = std::nullopt);

/// Canonical text form: every key, fixed order, round-trips through
/// parse_config.
std::string config_to_string(const ExperimentConfig& c);

/// Names of every recognised key, as `section.key`.
std::vector<std::string> config_keys();

}  // namespace compcap
