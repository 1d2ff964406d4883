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

#include "compcap/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "compcap/error.hpp"
#include "compcap/splits.hpp"
#include "compcap/text.hpp"
#include "json.hpp"

namespace compcap {

PairRecallResult recall_at_k(const CaptionSets& generated, const CaptionSets& references,
                             const std::vector<std::int64_t>& eval_ids, const ConceptPair& pair, const Lexicon& lex,
                             std::size_t k, std::size_t min_refs) {
  if (k < 1) throw MetricError("recall_at_k: K must be >= 1");
  if (min_refs < 1) throw MetricError("recall_at_k: min_refs must be >= 1");
  PairRecallResult out;
  out.pair = pair.name();
  for (std::int64_t id : eval_ids) {
    auto ref = references.find(id);
    if (ref == references.end()) throw MetricError("no reference captions for scene " + std::to_string(id));
    if (min_refs > ref->second.size()) {
      throw MetricError("min_refs " + std::to_string(min_refs) + " exceeds the " + std::to_string(ref->second.size()) +
                        " references of scene " + std::to_string(id));
    }
    const auto matching = static_cast<std::size_t>(std::count_if(
        ref->second.begin(), ref->second.end(), [&](const std::string& c) { return match_pair(c, pair, lex); }));
    if (matching < min_refs) continue;
    auto gen = generated.find(id);
    if (gen == generated.end()) throw MetricError("no generated captions for scene " + std::to_string(id));
    const std::size_t n = std::min(k, gen->second.size());
    const bool hit = std::any_of(gen->second.begin(), gen->second.begin() + static_cast<std::ptrdiff_t>(n),
                                 [&](const std::string& c) { return match_pair(c, pair, lex); });
    out.detail.emplace_back(id, hit);
    ++out.m;
    out.hits += hit;
  }
  if (out.m == 0) {
    throw MetricError("recall undefined for '" + out.pair + "': no eval scene has " + std::to_string(min_refs) +
                      " matching references");
  }
  out.recall = static_cast<double>(out.hits) / static_cast<double>(out.m);
  return out;
}

namespace {

struct Constituents {
  bool modifier = false;
  bool noun = false;
};

Constituents find_constituents(const std::string& caption, const ConceptPair& pair, const Lexicon& lex) {
  const TaggedCaption tc = tag_caption(caption, lex);
  const auto want_mod = pair.modifier_class == WordClass::kVerb ? TaggedCaption::Kind::kVerb
                                                                : TaggedCaption::Kind::kAdjective;
  const auto mod = pair.modifier_class == WordClass::kVerb ? lex.verb_index(pair.modifier)
                                                           : lex.adjective_index(pair.modifier);
  const auto noun = lex.noun_index(pair.noun);
  if (!mod || !noun) throw LexiconError("pair '" + pair.name() + "' is not in the lexicon");
  const std::size_t mod_index = *mod, noun_index = *noun;
  Constituents c;
  for (const auto& tag : tc.tags) {
    if (tag.kind == want_mod && tag.index == mod_index) c.modifier = true;
    if (tag.kind == TaggedCaption::Kind::kNoun && tag.index == noun_index) c.noun = true;
  }
  return c;
}

}  // namespace

std::vector<std::string> filter_distractors(const std::vector<std::string>& pool, const ConceptPair& pair,
                                            const Lexicon& lex) {
  std::vector<std::string> out;
  for (const auto& cap : pool) {
    const Constituents c = find_constituents(cap, pair, lex);
    if (c.modifier != c.noun) out.push_back(cap);
  }
  return out;
}

CaptionScorer model_scorer(ModelParams& p, const Vocabulary& vocab) {
  return [&p, &vocab](const SceneInstance& scene, const std::vector<std::string>& candidates) {
    std::vector<std::vector<std::size_t>> seqs;
    seqs.reserve(candidates.size());
    for (const auto& c : candidates) {
      std::vector<std::size_t> s{kBos};
      const auto ids = vocab.encode(c);
      s.insert(s.end(), ids.begin(), ids.end());
      seqs.push_back(std::move(s));
    }
    return similarity_scores(scene.regions, seqs, p);
  };
}

double ranking_recall(const CaptionScorer& scorer, const std::vector<const SceneInstance*>& scenes,
                      const ConceptPair& pair, const Lexicon& lex, const std::vector<std::string>& distractor_pool,
                      std::size_t k, std::size_t n_distractors, std::mt19937_64& rng) {
  if (scenes.empty()) throw MetricError("ranking_recall: no eval scenes for '" + pair.name() + "'");
  const std::vector<std::string> qualifying = filter_distractors(distractor_pool, pair, lex);
  if (qualifying.size() < n_distractors) {
    throw MetricError("ranking_recall: " + std::to_string(qualifying.size()) + " of " +
                      std::to_string(distractor_pool.size()) + " pool captions qualify as distractors for '" +
                      pair.name() + "', need " + std::to_string(n_distractors));
  }
  std::vector<std::size_t> order(qualifying.size());
  std::size_t hits = 0;
  for (const SceneInstance* scene : scenes) {
    std::vector<std::string> candidates = scene->captions;
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < n_distractors; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
      std::swap(order[i], order[pick(rng)]);
      candidates.push_back(qualifying[order[i]]);
    }
    const std::vector<double> scores = scorer(*scene, candidates);
    if (scores.size() != candidates.size()) throw MetricError("ranking_recall: scorer returned wrong count");
    std::vector<std::size_t> rank(candidates.size());
    for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = i;
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const std::size_t top = std::min(k, rank.size());
    for (std::size_t i = 0; i < top; ++i) {
      if (match_pair(candidates[rank[i]], pair, lex)) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(scenes.size());
}

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(const std::vector<std::string>& toks, std::size_t n) {
  std::map<Ngram, std::size_t> out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) ++out[Ngram(toks.begin() + i, toks.begin() + i + n)];
  return out;
}

}  // namespace

double bleu(const std::map<std::int64_t, std::string>& candidates, const CaptionSets& references, std::size_t max_n) {
  if (candidates.empty()) throw MetricError("bleu: empty candidate corpus");
  if (max_n < 1) throw MetricError("bleu: max_n must be >= 1");
  std::vector<double> clipped(max_n + 1, 0.0), total(max_n + 1, 0.0);
  double cand_len = 0.0, ref_len = 0.0;
  for (const auto& [id, cand] : candidates) {
    auto it = references.find(id);
    if (it == references.end() || it->second.empty()) {
      throw MetricError("bleu: scene " + std::to_string(id) + " has no references");
    }
    const auto ct = tokenize(cand);
    std::vector<std::vector<std::string>> refs;
    for (const auto& r : it->second) refs.push_back(tokenize(r));
    cand_len += static_cast<double>(ct.size());
    std::size_t best = refs.front().size();
    for (const auto& r : refs) {
      const auto d = [&](std::size_t len) { return len > ct.size() ? len - ct.size() : ct.size() - len; };
      if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
    }
    ref_len += static_cast<double>(best);
    for (std::size_t n = 1; n <= max_n; ++n) {
      const auto cc = ngram_counts(ct, n);
      std::map<Ngram, std::size_t> max_ref;
      for (const auto& r : refs) {
        for (const auto& [g, cnt] : ngram_counts(r, n)) max_ref[g] = std::max(max_ref[g], cnt);
      }
      for (const auto& [g, cnt] : cc) {
        auto m = max_ref.find(g);
        clipped[n] += static_cast<double>(std::min(cnt, m == max_ref.end() ? std::size_t{0} : m->second));
        total[n] += static_cast<double>(cnt);
      }
    }
  }
  if (cand_len == 0.0) return 0.0;
  double log_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (total[n] == 0.0) continue;
    log_sum += std::log(std::max(clipped[n] / total[n], 1e-9));
    ++orders;
  }
  const double bp = cand_len < ref_len ? std::exp(1.0 - ref_len / cand_len) : 1.0;
  return bp * std::exp(log_sum / static_cast<double>(orders));
}

DiversityReport diversity_metrics(const std::map<std::int64_t, std::string>& generated,
                                  const std::vector<std::string>& training_captions, const CaptionSets& references,
                                  std::size_t seg_len) {
  if (generated.empty()) throw MetricError("diversity_metrics: empty generated corpus");
  if (training_captions.empty()) throw MetricError("diversity_metrics: empty training corpus");
  if (seg_len < 2) throw MetricError("diversity_metrics: segment length must be >= 2");
  DiversityReport d;
  d.seg_len = seg_len;

  // Segments run over the captions in sorted order so no metric depends on
  // how scenes are keyed.
  std::vector<std::vector<std::string>> tokenized;
  std::set<std::string> gen_types;
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& [id, cap] : generated) {
    auto toks = tokenize(cap);
    const double len = static_cast<double>(toks.size());
    sum += len;
    sum_sq += len * len;
    gen_types.insert(toks.begin(), toks.end());
    tokenized.push_back(std::move(toks));
  }
  std::sort(tokenized.begin(), tokenized.end());
  std::vector<std::string> stream;
  for (const auto& toks : tokenized) stream.insert(stream.end(), toks.begin(), toks.end());
  const double n = static_cast<double>(generated.size());
  d.asl = sum / n;
  d.sdsl = std::sqrt(std::max(0.0, sum_sq / n - d.asl * d.asl));
  d.types = gen_types.size();

  std::size_t seg = seg_len;
  if (stream.size() < seg_len) {
    std::cerr << "warning: " << stream.size() << " generated tokens is below the TTR segment length " << seg_len
              << ", using one segment\n";
    seg = stream.size();
  }
  if (seg > 0) {
    double t1 = 0.0, t2 = 0.0;
    std::size_t segments = 0;
    for (std::size_t at = 0; at + seg <= stream.size(); at += seg) {
      std::set<std::string> uni(stream.begin() + at, stream.begin() + at + seg);
      std::set<std::pair<std::string, std::string>> bi;
      for (std::size_t i = at; i + 1 < at + seg; ++i) bi.emplace(stream[i], stream[i + 1]);
      t1 += static_cast<double>(uni.size()) / static_cast<double>(seg);
      if (seg > 1) t2 += static_cast<double>(bi.size()) / static_cast<double>(seg - 1);
      ++segments;
    }
    d.ttr1 = t1 / static_cast<double>(segments);
    d.ttr2 = t2 / static_cast<double>(segments);
  }

  std::set<std::string> train_norm, train_types;
  for (const auto& c : training_captions) {
    const auto toks = tokenize(c);
    train_norm.insert(join_tokens(toks));
    train_types.insert(toks.begin(), toks.end());
  }
  std::size_t novel = 0;
  for (const auto& [id, cap] : generated) novel += train_norm.count(normalize_caption(cap)) == 0;
  d.pct_novel = 100.0 * static_cast<double>(novel) / n;
  std::size_t shared = 0;
  for (const auto& w : gen_types) shared += train_types.count(w);
  d.coverage = train_types.empty() ? 0.0 : static_cast<double>(shared) / static_cast<double>(train_types.size());

  double loc = 0.0;
  std::vector<double> shares;
  for (const auto& [id, cap] : generated) {
    auto it = references.find(id);
    if (it == references.end() || it->second.empty()) continue;
    std::set<std::string> common;
    bool first = true;
    for (const auto& r : it->second) {
      const auto toks = tokenize(r);
      std::set<std::string> types(toks.begin(), toks.end());
      if (first) {
        common = std::move(types);
        first = false;
      } else {
        std::set<std::string> keep;
        std::set_intersection(common.begin(), common.end(), types.begin(), types.end(),
                              std::inserter(keep, keep.end()));
        common = std::move(keep);
      }
    }
    if (common.empty()) continue;
    const auto toks = tokenize(cap);
    const std::set<std::string> gt(toks.begin(), toks.end());
    std::size_t found = 0;
    for (const auto& w : common) found += gt.count(w);
    shares.push_back(static_cast<double>(found) / static_cast<double>(common.size()));
  }
  std::sort(shares.begin(), shares.end());
  for (double v : shares) loc += v;
  d.loc5 = shares.empty() ? 0.0 : loc / static_cast<double>(shares.size());
  return d;
}

EvalReport aggregate_report(const std::vector<PairRecallResult>& per_pair,
                            const std::map<std::string, std::string>& category_of, std::optional<double> bleu_score,
                            std::optional<DiversityReport> diversity) {
  EvalReport r;
  r.pairs = per_pair;
  r.bleu = bleu_score;
  r.diversity = diversity;
  std::map<std::string, std::pair<double, std::size_t>> sums;
  double total = 0.0;
  for (const auto& p : per_pair) {
    auto it = category_of.find(p.pair);
    if (it == category_of.end()) throw MetricError("pair '" + p.pair + "' has no category");
    auto& s = sums[it->second];
    s.first += p.recall;
    ++s.second;
    total += p.recall;
  }
  std::vector<std::string> names;
  for (PairCategory c : kAllCategories) {
    const std::string name(category_name(c));
    if (sums.count(name)) names.push_back(name);
  }
  for (const auto& [name, s] : sums) {
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
  }
  for (const auto& name : names) {
    const auto& s = sums[name];
    r.categories.push_back({name, s.first / static_cast<double>(s.second), s.second});
  }
  r.mean_recall = per_pair.empty() ? 0.0 : total / static_cast<double>(per_pair.size());
  return r;
}

namespace {

nlohmann::ordered_json diversity_object(const DiversityReport& d) {
  nlohmann::ordered_json j;
  j["ASL"] = d.asl;
  j["SDSL"] = d.sdsl;
  j["Types"] = d.types;
  j["TTR1"] = d.ttr1;
  j["TTR2"] = d.ttr2;
  j["pct_novel"] = d.pct_novel;
  j["Cov"] = d.coverage;
  j["Loc5"] = d.loc5;
  j["definitions"] = {{"ttr_segment_tokens", d.seg_len},
                      {"loc5", "share of words present in every reference that the generated caption uses"},
                      {"novel", "exact match after lowercasing and stripping punctuation"}};
  return j;
}

}  // namespace

std::string diversity_json(const DiversityReport& d) { return diversity_object(d).dump(2); }

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["mean_recall"] = r.mean_recall;
  auto& pairs = j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({{"pair", p.pair}, {"recall", p.recall}, {"hits", p.hits}, {"scenes", p.m}});
  }
  auto& cats = j["categories"] = nlohmann::ordered_json::array();
  for (const auto& c : r.categories) cats.push_back({{"category", c.category}, {"mean", c.mean}, {"pairs", c.pairs}});
  if (r.bleu) j["bleu"] = *r.bleu;
  if (r.diversity) j["diversity"] = diversity_object(*r.diversity);
  return j.dump(2);
}

std::string report_text(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  os << std::left << std::setw(24) << "pair" << std::right << std::setw(10) << "Recall@K" << std::setw(8) << "hits"
     << std::setw(8) << "scenes" << '\n';
  for (const auto& p : r.pairs) {
    os << std::left << std::setw(24) << p.pair << std::right << std::setw(10) << 100.0 * p.recall << std::setw(8)
       << p.hits << std::setw(8) << p.m << '\n';
  }
  os << '\n' << std::left << std::setw(24) << "category" << std::right << std::setw(10) << "mean" << '\n';
  for (const auto& c : r.categories) {
    os << std::left << std::setw(24) << c.category << std::right << std::setw(10) << 100.0 * c.mean << '\n';
  }
  os << '\n' << std::left << std::setw(24) << "R (mean Recall@K)" << std::right << std::setw(10)
     << 100.0 * r.mean_recall << '\n';
  if (r.bleu) os << std::left << std::setw(24) << "BLEU" << std::right << std::setw(10) << 100.0 * *r.bleu << '\n';
  if (r.diversity) {
    const auto& d = *r.diversity;
    os << '\n' << std::setprecision(3);
    os << "ASL " << d.asl << "  SDSL " << d.sdsl << "  Types " << d.types << "  TTR1 " << d.ttr1 << "  TTR2 "
       << d.ttr2 << "  %Novel " << d.pct_novel << "  Cov " << d.coverage << "  Loc5 " << d.loc5 << '\n';
  }
  return os.str();
}

}  // namespace compcap
