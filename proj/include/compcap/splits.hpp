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
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "compcap/lexicon.hpp"
#include "compcap/scenes.hpp"

namespace compcap {

/// A caption tokenized once and tagged against the lexicon, so that many
/// pairs can be matched without re-tokenizing.
struct TaggedCaption {
  enum class Kind : std::uint8_t { kOther, kNoun, kAdjective, kVerb, kFiller };
  struct Tag {
    Kind kind = Kind::kOther;
    std::uint16_t index = 0;
  };
  std::vector<std::string> tokens;
  std::vector<Tag> tags;
};

TaggedCaption tag_caption(std::string_view caption, const Lexicon& lex);

/// True iff the caption contains the pair with the modifier attached to the
/// noun: an adjective must be followed by the pair noun before any other
/// noun; a verb must be preceded by the pair noun with only auxiliaries,
/// articles and adverbs in between.
bool match_pair(const TaggedCaption& caption, const ConceptPair& pair, const Lexicon& lex);
bool match_pair(std::string_view caption, const ConceptPair& pair, const Lexicon& lex);

/// Held-out pairs of one training set. Empty = FULL setting.
struct SplitSpec {
  std::vector<ConceptPair> held_out_pairs;
  int group_id = 0;

  bool full() const { return held_out_pairs.empty(); }
};

struct DatasetSplits {
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> val;
  /// pair name -> eval scene ids, in id order.
  std::map<std::string, std::vector<std::int64_t>> eval;
  double removed_fraction = 0.0;

  /// Union of all eval sets.
  std::vector<std::int64_t> eval_ids() const;
};

struct SplitOptions {
  /// FULL setting only: fraction of the remaining scenes held out for validation.
  double val_fraction = 0.05;
  /// FULL setting only: scenes forced into the eval holdout (e.g. the union of
  /// the held-out groups' eval sets). Empty = sample val_fraction as eval too.
  std::vector<std::int64_t> reserved_eval;
  /// FULL setting only: pairs whose membership is recorded in the eval map.
  std::vector<ConceptPair> tracked_pairs;
};

/// For each scene, the indices of `pairs` matched by at least one caption.
std::vector<std::vector<std::size_t>> scene_pair_matches(const std::vector<SceneInstance>& dataset,
                                                         const std::vector<ConceptPair>& pairs, const Lexicon& lex);

DatasetSplits build_splits(const std::vector<SceneInstance>& dataset, const SplitSpec& spec, const Lexicon& lex,
                           Rng& rng, const SplitOptions& options = {});

struct PairCounts {
  std::string pair;
  std::size_t dataset = 0;  // scenes with >= 1 matching caption
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t eval = 0;
  std::size_t captions = 0;  // matching captions over the dataset
};

struct ValidationReport {
  bool train_clean = true;  // (1)
  bool eval_valid = true;   // (2)
  bool disjoint = true;     // train vs val/eval
  bool removed_ok = true;   // (3), a warning only
  double removed_fraction = 0.0;
  std::vector<PairCounts> counts;  // (4)
  std::vector<std::string> failures;
  std::vector<std::string> warnings;

  bool ok() const { return train_clean && eval_valid && disjoint; }
  std::string table() const;
};

ValidationReport validate_splits(const DatasetSplits& splits, const SplitSpec& spec,
                                 const std::vector<SceneInstance>& dataset, const Lexicon& lex);

/// Distributes pairs over n_groups so that no group repeats a modifier or
/// noun, groups hold at most ceil(n / n_groups) pairs, and each category is
/// spread as evenly as possible. Pairs are placed first-fit in input order
/// with backtracking.
std::vector<SplitSpec> group_pairs(const std::vector<ConceptPair>& pairs, std::size_t n_groups);

std::string splits_to_json(const DatasetSplits& splits, const SplitSpec& spec);
/// Returns the splits and fills `spec` with the echoed held-out pairs.
DatasetSplits splits_from_json(const std::string& text, const Lexicon& lex, SplitSpec* spec = nullptr);

}  // namespace compcap
