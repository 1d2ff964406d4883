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
#include <random>
#include <string>
#include <vector>

#include "compcap/lexicon.hpp"
#include "compcap/tensor.hpp"

namespace compcap {

using Rng = std::mt19937_64;

/// A symbolic object. Salience values in [0, 1] scale how visible an
/// attribute is in the rendered features and how often annotators mention it.
struct SceneObject {
  std::string category;
  std::optional<std::string> color;
  std::optional<std::string> size;
  std::optional<std::string> action;
  std::optional<std::string> patient;
  double color_salience = 1.0;
  double size_salience = 1.0;
  double action_salience = 1.0;
  /// 1 for the described object, lower for background clutter.
  double prominence = 1.0;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct SceneInstance {
  std::int64_t id = 0;
  std::vector<SceneObject> objects;  // objects[0] is the described object
  Tensor regions;                    // [R x I]
  std::vector<std::string> captions;
};

struct GenConfig {
  std::size_t regions = 4;        // R
  std::size_t feature_dim = 64;   // I
  std::size_t captions = 5;       // K
  double noise_sigma = 0.05;
  // Per-caption mention probabilities, averaged over salience.
  double p_color = 0.31;
  double p_size = 0.31;
  double p_verb = 0.31;
  // Scene content.
  double color_presence = 0.65;
  double size_presence = 0.28;
  double action_presence = 0.7;
  double patient_mention = 0.7;
  double distractor_prob = 0.4;
  double there_is_prob = 0.5;
  double distractor_prominence = 0.5;
  /// Mention probability is p * (g + 1) * s^g, capped so it never exceeds 1.
  double salience_exponent = 2.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Column layout of a rendered region row.
struct FeatureLayout {
  std::size_t category = 0;  // nouns + 1 background code
  std::size_t color = 0;
  std::size_t size = 0;
  std::size_t action = 0;
  std::size_t patient = 0;
  std::size_t color_offset() const { return category; }
  std::size_t size_offset() const { return color_offset() + color; }
  std::size_t action_offset() const { return size_offset() + size; }
  std::size_t patient_offset() const { return action_offset() + action; }
  std::size_t width() const { return patient_offset() + patient; }
};

FeatureLayout feature_layout(const Lexicon& lex);

/// Exponent actually used for mention probability p; reduced when
/// p * (g + 1) would exceed 1.
double effective_salience_exponent(double p, double g);
double mention_probability(double p, double g, double salience);

SceneObject sample_object(Rng& rng, const Lexicon& lex, const GenConfig& cfg);
/// Objects only: the described object plus an optional distractor.
SceneInstance sample_scene(Rng& rng, const Lexicon& lex, const GenConfig& cfg);
Tensor render_regions(const SceneInstance& scene, const Lexicon& lex, const GenConfig& cfg, Rng& rng);
std::vector<std::string> generate_captions(const SceneInstance& scene, Rng& rng, const Lexicon& lex,
                                           const GenConfig& cfg);

/// Scene `id` is drawn from an RNG seeded by (cfg.seed, id) so any id range
/// can be produced independently.
SceneInstance generate_scene(std::int64_t id, const Lexicon& lex, const GenConfig& cfg);
std::vector<SceneInstance> generate_dataset(std::size_t n_scenes, const GenConfig& cfg, const Lexicon& lex);

std::string scene_to_json(const SceneInstance& scene);
void write_dataset(std::ostream& os, const std::vector<SceneInstance>& scenes);
void write_dataset(const std::string& path, const std::vector<SceneInstance>& scenes);
/// Accepts files from other producers: "objects" may be absent and object
/// fields may be missing or null. Regions must be rectangular and captions
/// non-empty.
std::vector<SceneInstance> read_dataset(std::istream& is);
std::vector<SceneInstance> read_dataset(const std::string& path);

}  // namespace compcap
