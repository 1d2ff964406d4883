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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "compcap/lexicon.hpp"
#include "compcap/model.hpp"
#include "compcap/scenes.hpp"
#include "compcap/vocab.hpp"

namespace compcap {

/// scene id -> captions (generated or reference).
using CaptionSets = std::map<std::int64_t, std::vector<std::string>>;

struct PairRecallResult {
  std::string pair;
  std::size_t m = 0;     // scenes evaluated
  std::size_t hits = 0;  // scenes with a qualifying caption among the first K
  double recall = 0.0;
  std::vector<std::pair<std::int64_t, bool>> detail;
};

/// Recall@K of `pair` over the eval scenes whose references contain the pair
/// at least `min_refs` times. Throws MetricError when no scene qualifies.
PairRecallResult recall_at_k(const CaptionSets& generated, const CaptionSets& references,
                             const std::vector<std::int64_t>& eval_ids, const ConceptPair& pair, const Lexicon& lex,
                             std::size_t k, std::size_t min_refs = 1);

/// Captions mentioning exactly one constituent of `pair`.
std::vector<std::string> filter_distractors(const std::vector<std::string>& pool, const ConceptPair& pair,
                                            const Lexicon& lex);

/// Scores candidate captions against one scene; higher is better.
using CaptionScorer =
    std::function<std::vector<double>(const SceneInstance& scene, const std::vector<std::string>& candidates)>;

CaptionScorer model_scorer(ModelParams& p, const Vocabulary& vocab);

/// Ranks each scene's own references together with `n_distractors` sampled
/// qualifying distractors by `scorer`; a scene is a hit when one of the top K
/// matches the pair. Throws MetricError when too few distractors qualify.
double ranking_recall(const CaptionScorer& scorer, const std::vector<const SceneInstance*>& scenes,
                      const ConceptPair& pair, const Lexicon& lex, const std::vector<std::string>& distractor_pool,
                      std::size_t k, std::size_t n_distractors, std::mt19937_64& rng);

/// Corpus BLEU with clipped n-gram counts, uniform weights and the closest
/// reference length for the brevity penalty. Orders with no candidate
/// n-grams are left out of the mean; zero precisions are floored at 1e-9.
double bleu(const std::map<std::int64_t, std::string>& candidates, const CaptionSets& references,
            std::size_t max_n = 4);

struct DiversityReport {
  double asl = 0.0;
  double sdsl = 0.0;
  std::size_t types = 0;
  double ttr1 = 0.0;
  double ttr2 = 0.0;
  double pct_novel = 0.0;
  double coverage = 0.0;
  double loc5 = 0.0;
  std::size_t seg_len = 100;
};

/// Diversity of one generated caption per scene. Loc5 is the mean over
/// scenes of the share of words found in every reference that the generated
/// caption also uses; scenes without such words are skipped.
DiversityReport diversity_metrics(const std::map<std::int64_t, std::string>& generated,
                                  const std::vector<std::string>& training_captions, const CaptionSets& references,
                                  std::size_t seg_len = 100);

struct CategoryMean {
  std::string category;
  double mean = 0.0;
  std::size_t pairs = 0;
};

struct EvalReport {
  std::vector<PairRecallResult> pairs;
  std::vector<CategoryMean> categories;
  double mean_recall = 0.0;
  std::optional<double> bleu;
  std::optional<DiversityReport> diversity;
};

/// Category means are plain means of member-pair recalls; categories without
/// pairs are omitted. `category_of` maps a pair name to its category label.
EvalReport aggregate_report(const std::vector<PairRecallResult>& per_pair,
                            const std::map<std::string, std::string>& category_of,
                            std::optional<double> bleu_score = std::nullopt,
                            std::optional<DiversityReport> diversity = std::nullopt);

std::string diversity_json(const DiversityReport& d);
std::string report_json(const EvalReport& r);
std::string report_text(const EvalReport& r);

}  // namespace compcap
