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

#include "compcap/splits.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "compcap/error.hpp"
#include "compcap/text.hpp"
#include "json.hpp"

namespace compcap {
namespace {

using nlohmann::json;
using Kind = TaggedCaption::Kind;

bool is_filler(std::string_view t) {
  static const std::unordered_set<std::string_view> words = {
      "is", "are", "was", "were", "a", "an", "the", "also", "still", "now", "currently", "just",
  };
  return words.count(t) != 0;
}

struct ResolvedPair {
  std::size_t modifier;
  std::size_t noun;
  bool verb;
};

ResolvedPair resolve(const ConceptPair& p, const Lexicon& lex) {
  const auto n = lex.noun_index(p.noun);
  if (!n) throw LexiconError("pair noun \"" + p.noun + "\" is not in the lexicon");
  if (p.modifier_class == WordClass::kVerb) {
    const auto v = lex.verb_index(p.modifier);
    if (!v) throw LexiconError("pair verb \"" + p.modifier + "\" is not in the lexicon");
    return {*v, *n, true};
  }
  const auto a = lex.adjective_index(p.modifier);
  if (!a) throw LexiconError("pair adjective \"" + p.modifier + "\" is not in the lexicon");
  return {*a, *n, false};
}

bool match_resolved(const TaggedCaption& c, const ResolvedPair& p) {
  const auto& tags = c.tags;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!p.verb && tags[i].kind == Kind::kAdjective && tags[i].index == p.modifier) {
      for (std::size_t j = i + 1; j < tags.size(); ++j) {
        if (tags[j].kind == Kind::kNoun) {
          if (tags[j].index == p.noun) return true;
          break;
        }
      }
    } else if (p.verb && tags[i].kind == Kind::kVerb && tags[i].index == p.modifier) {
      for (std::size_t j = i; j-- > 0;) {
        if (tags[j].kind == Kind::kNoun) {
          if (tags[j].index == p.noun) return true;
          break;
        }
        if (tags[j].kind != Kind::kFiller) break;
      }
    }
  }
  return false;
}

std::vector<std::int64_t> sorted(std::vector<std::int64_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TaggedCaption tag_caption(std::string_view caption, const Lexicon& lex) {
  TaggedCaption c;
  c.tokens = tokenize(caption);
  c.tags.resize(c.tokens.size());
  for (std::size_t i = 0; i < c.tokens.size(); ++i) {
    if (const auto info = lex.lookup(c.tokens[i])) {
      switch (info->word_class) {
        case WordClass::kNoun: c.tags[i].kind = Kind::kNoun; break;
        case WordClass::kAdjective: c.tags[i].kind = Kind::kAdjective; break;
        case WordClass::kVerb: c.tags[i].kind = Kind::kVerb; break;
      }
      c.tags[i].index = info->index;
    } else if (is_filler(c.tokens[i])) {
      c.tags[i].kind = Kind::kFiller;
    }
  }
  return c;
}

bool match_pair(const TaggedCaption& caption, const ConceptPair& pair, const Lexicon& lex) {
  return match_resolved(caption, resolve(pair, lex));
}

bool match_pair(std::string_view caption, const ConceptPair& pair, const Lexicon& lex) {
  return match_pair(tag_caption(caption, lex), pair, lex);
}

std::vector<std::int64_t> DatasetSplits::eval_ids() const {
  std::set<std::int64_t> ids;
  for (const auto& [_, v] : eval) ids.insert(v.begin(), v.end());
  return {ids.begin(), ids.end()};
}

std::vector<std::vector<std::size_t>> scene_pair_matches(const std::vector<SceneInstance>& dataset,
                                                         const std::vector<ConceptPair>& pairs, const Lexicon& lex) {
  std::vector<ResolvedPair> resolved;
  for (const auto& p : pairs) resolved.push_back(resolve(p, lex));
  std::vector<std::vector<std::size_t>> out(dataset.size());
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    std::vector<TaggedCaption> tagged;
    for (const auto& c : dataset[s].captions) tagged.push_back(tag_caption(c, lex));
    for (std::size_t p = 0; p < resolved.size(); ++p) {
      for (const auto& t : tagged) {
        if (match_resolved(t, resolved[p])) {
          out[s].push_back(p);
          break;
        }
      }
    }
  }
  return out;
}

DatasetSplits build_splits(const std::vector<SceneInstance>& dataset, const SplitSpec& spec, const Lexicon& lex,
                           Rng& rng, const SplitOptions& options) {
  DatasetSplits out;
  if (dataset.empty()) throw SplitError("cannot split an empty dataset");

  if (!spec.full()) {
    const auto matches = scene_pair_matches(dataset, spec.held_out_pairs, lex);
    std::vector<std::vector<std::int64_t>> per_pair(spec.held_out_pairs.size());
    std::size_t excluded = 0;
    for (std::size_t s = 0; s < dataset.size(); ++s) {
      if (matches[s].empty()) {
        out.train.push_back(dataset[s].id);
        continue;
      }
      ++excluded;
      for (std::size_t p : matches[s]) per_pair[p].push_back(dataset[s].id);
    }
    for (std::size_t p = 0; p < per_pair.size(); ++p) {
      if (per_pair[p].empty()) {
        throw SplitError("held-out pair \"" + spec.held_out_pairs[p].name() + "\" has no matching scenes");
      }
    }
    // Each excluded scene lands in val or eval once; pairs are divided 50/50
    // in spec order, with later pairs inheriting earlier assignments.
    std::map<std::int64_t, bool> to_eval;
    for (auto& ids : per_pair) {
      std::vector<std::int64_t> fresh;
      std::size_t n_eval = 0;
      for (auto id : ids) {
        if (auto it = to_eval.find(id); it != to_eval.end()) {
          n_eval += it->second ? 1 : 0;
        } else {
          fresh.push_back(id);
        }
      }
      std::shuffle(fresh.begin(), fresh.end(), rng);
      const std::size_t want_eval = (ids.size() + 1) / 2;
      for (auto id : fresh) {
        const bool e = n_eval < want_eval;
        to_eval[id] = e;
        n_eval += e ? 1 : 0;
      }
    }
    for (const auto& [id, e] : to_eval) {
      if (!e) out.val.push_back(id);
    }
    for (std::size_t p = 0; p < per_pair.size(); ++p) {
      auto& ev = out.eval[spec.held_out_pairs[p].name()];
      for (auto id : per_pair[p]) {
        if (to_eval[id]) ev.push_back(id);
      }
      ev = sorted(std::move(ev));
    }
    out.removed_fraction = static_cast<double>(excluded) / static_cast<double>(dataset.size());
    return out;
  }

  if (!(options.val_fraction > 0.0 && options.val_fraction < 0.5)) {
    throw SplitError("val_fraction must be in (0, 0.5)");
  }
  std::set<std::int64_t> known;
  for (const auto& s : dataset) known.insert(s.id);
  std::set<std::int64_t> eval_set;
  for (auto id : options.reserved_eval) {
    if (!known.count(id)) throw SplitError("reserved eval scene " + std::to_string(id) + " is not in the dataset");
    eval_set.insert(id);
  }
  std::vector<std::int64_t> rest;
  for (auto id : known) {
    if (!eval_set.count(id)) rest.push_back(id);
  }
  std::shuffle(rest.begin(), rest.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(options.val_fraction * static_cast<double>(known.size())));
  if (n_val >= rest.size()) throw SplitError("FULL holdout leaves no training scenes");
  std::set<std::int64_t> val_set(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::size_t cursor = n_val;
  if (options.reserved_eval.empty()) {
    const std::size_t n_eval = std::min(n_val, rest.size() - n_val - 1);
    eval_set.insert(rest.begin() + static_cast<std::ptrdiff_t>(cursor),
                    rest.begin() + static_cast<std::ptrdiff_t>(cursor + n_eval));
    cursor += n_eval;
  }
  for (auto id : known) {
    if (!val_set.count(id) && !eval_set.count(id)) out.train.push_back(id);
  }
  out.val.assign(val_set.begin(), val_set.end());
  if (!options.tracked_pairs.empty()) {
    std::vector<SceneInstance> held;
    for (const auto& s : dataset) {
      if (eval_set.count(s.id)) held.push_back(s);
    }
    const auto matches = scene_pair_matches(held, options.tracked_pairs, lex);
    for (const auto& p : options.tracked_pairs) out.eval[p.name()];
    for (std::size_t s = 0; s < held.size(); ++s) {
      for (std::size_t p : matches[s]) out.eval[options.tracked_pairs[p].name()].push_back(held[s].id);
    }
  } else {
    out.eval["*"] = {eval_set.begin(), eval_set.end()};
  }
  out.removed_fraction =
      static_cast<double>(val_set.size() + eval_set.size()) / static_cast<double>(known.size());
  return out;
}

std::string ValidationReport::table() const {
  std::ostringstream os;
  os << std::left << std::setw(16) << "pair" << std::right << std::setw(9) << "dataset" << std::setw(9)
     << "captions" << std::setw(7) << "train" << std::setw(6) << "val" << std::setw(6) << "eval" << '\n';
  for (const auto& c : counts) {
    os << std::left << std::setw(16) << c.pair << std::right << std::setw(9) << c.dataset << std::setw(9)
       << c.captions << std::setw(7) << c.train << std::setw(6) << c.val << std::setw(6) << c.eval << '\n';
  }
  os << "removed fraction: " << std::fixed << std::setprecision(4) << removed_fraction << '\n';
  return os.str();
}

ValidationReport validate_splits(const DatasetSplits& splits, const SplitSpec& spec,
                                 const std::vector<SceneInstance>& dataset, const Lexicon& lex) {
  ValidationReport r;
  r.removed_fraction = splits.removed_fraction;
  std::map<std::int64_t, const SceneInstance*> by_id;
  for (const auto& s : dataset) by_id[s.id] = &s;
  auto scene = [&](std::int64_t id) -> const SceneInstance& {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw SplitError("split refers to unknown scene " + std::to_string(id));
    return *it->second;
  };

  const std::set<std::int64_t> train(splits.train.begin(), splits.train.end());
  const std::set<std::int64_t> val(splits.val.begin(), splits.val.end());
  const auto eval_all = splits.eval_ids();
  for (auto id : val) {
    if (train.count(id)) {
      r.disjoint = false;
      r.failures.push_back("scene " + std::to_string(id) + " is in both train and val");
    }
  }
  for (auto id : eval_all) {
    if (train.count(id)) {
      r.disjoint = false;
      r.failures.push_back("scene " + std::to_string(id) + " is in both train and eval");
    }
  }

  std::vector<ResolvedPair> resolved;
  for (const auto& p : spec.held_out_pairs) resolved.push_back(resolve(p, lex));

  // (1) no train caption realizes a held-out pair.
  std::map<std::int64_t, std::vector<TaggedCaption>> tagged;
  auto tags_of = [&](std::int64_t id) -> const std::vector<TaggedCaption>& {
    auto it = tagged.find(id);
    if (it != tagged.end()) return it->second;
    std::vector<TaggedCaption> t;
    for (const auto& c : scene(id).captions) t.push_back(tag_caption(c, lex));
    return tagged.emplace(id, std::move(t)).first->second;
  };
  for (auto id : splits.train) {
    const auto& caps = tags_of(id);
    for (std::size_t p = 0; p < resolved.size(); ++p) {
      for (std::size_t k = 0; k < caps.size(); ++k) {
        if (match_resolved(caps[k], resolved[p])) {
          r.train_clean = false;
          r.failures.push_back("train scene " + std::to_string(id) + " caption " + std::to_string(k) +
                               " contains held-out pair \"" + spec.held_out_pairs[p].name() + "\"");
        }
      }
    }
  }

  // (2) every eval scene carries its pair.
  for (std::size_t p = 0; p < spec.held_out_pairs.size(); ++p) {
    const std::string name = spec.held_out_pairs[p].name();
    auto it = splits.eval.find(name);
    if (it == splits.eval.end() || it->second.empty()) {
      r.eval_valid = false;
      r.failures.push_back("held-out pair \"" + name + "\" has no eval scenes");
      continue;
    }
    for (auto id : it->second) {
      const auto& caps = tags_of(id);
      const bool any = std::any_of(caps.begin(), caps.end(),
                                   [&](const TaggedCaption& c) { return match_resolved(c, resolved[p]); });
      if (!any) {
        r.eval_valid = false;
        r.failures.push_back("eval scene " + std::to_string(id) + " has no caption with pair \"" + name + "\"");
      }
    }
  }

  // (3) removed fraction.
  if (!spec.full() && splits.removed_fraction > 0.05) {
    r.removed_ok = false;
    std::ostringstream os;
    os << "removed fraction " << splits.removed_fraction << " exceeds 0.05";
    r.warnings.push_back(os.str());
  }

  // (4) occurrence counts, plus constituent coverage in train.
  std::vector<ConceptPair> counted = spec.held_out_pairs;
  if (spec.full()) {
    for (const auto& [name, _] : splits.eval) {
      if (name != "*") counted.push_back(parse_pair(lex, name));
    }
  }
  for (const auto& pair : counted) {
    const ResolvedPair rp = resolve(pair, lex);
    PairCounts pc;
    pc.pair = pair.name();
    const auto ev_it = splits.eval.find(pc.pair);
    const std::set<std::int64_t> ev = ev_it == splits.eval.end()
                                          ? std::set<std::int64_t>{}
                                          : std::set<std::int64_t>(ev_it->second.begin(), ev_it->second.end());
    for (const auto& s : dataset) {
      std::size_t hits = 0;
      for (const auto& c : tags_of(s.id)) hits += match_resolved(c, rp) ? 1 : 0;
      pc.captions += hits;
      if (hits == 0) continue;
      ++pc.dataset;
      pc.train += train.count(s.id);
      pc.val += val.count(s.id);
      pc.eval += ev.count(s.id);
    }
    r.counts.push_back(pc);
  }
  for (const auto& pair : spec.held_out_pairs) {
    const ResolvedPair rp = resolve(pair, lex);
    bool modifier_seen = false, noun_seen = false;
    for (auto id : splits.train) {
      for (const auto& c : tags_of(id)) {
        for (const auto& t : c.tags) {
          if (t.index == rp.modifier && t.kind == (rp.verb ? Kind::kVerb : Kind::kAdjective)) modifier_seen = true;
          if (t.kind == Kind::kNoun && t.index == rp.noun) noun_seen = true;
        }
      }
      if (modifier_seen && noun_seen) break;
    }
    if (!modifier_seen) r.warnings.push_back("\"" + pair.modifier + "\" never appears in train captions");
    if (!noun_seen) r.warnings.push_back("\"" + pair.noun + "\" never appears in train captions");
  }
  return r;
}

std::vector<SplitSpec> group_pairs(const std::vector<ConceptPair>& pairs, std::size_t n_groups) {
  if (n_groups == 0) throw GroupingError("n_groups must be >= 1");
  const std::size_t cap = (pairs.size() + n_groups - 1) / n_groups;
  std::map<PairCategory, std::size_t> cat_total;
  for (const auto& p : pairs) ++cat_total[p.category];
  std::map<PairCategory, std::size_t> cat_cap;
  for (const auto& [c, n] : cat_total) cat_cap[c] = (n + n_groups - 1) / n_groups;

  std::vector<std::vector<std::size_t>> groups(n_groups);
  std::vector<std::map<PairCategory, std::size_t>> used(n_groups);
  std::size_t deepest = 0;
  std::string blocker;

  auto conflict = [&](std::size_t g, std::size_t i) -> std::string {
    if (groups[g].size() >= cap) return "group full";
    if (used[g][pairs[i].category] >= cat_cap[pairs[i].category]) {
      return "category " + std::string(category_name(pairs[i].category)) + " already covered";
    }
    for (std::size_t j : groups[g]) {
      if (pairs[j].modifier == pairs[i].modifier) return "shares \"" + pairs[i].modifier + "\" with " + pairs[j].name();
      if (pairs[j].noun == pairs[i].noun) return "shares \"" + pairs[i].noun + "\" with " + pairs[j].name();
    }
    return {};
  };

  std::function<bool(std::size_t)> place = [&](std::size_t i) -> bool {
    if (i == pairs.size()) return true;
    std::string reasons;
    for (std::size_t g = 0; g < n_groups; ++g) {
      const std::string why = conflict(g, i);
      if (!why.empty()) {
        reasons += " group " + std::to_string(g + 1) + ": " + why + ";";
        continue;
      }
      groups[g].push_back(i);
      ++used[g][pairs[i].category];
      if (place(i + 1)) return true;
      groups[g].pop_back();
      --used[g][pairs[i].category];
    }
    if (i >= deepest) {
      deepest = i;
      blocker = "cannot place \"" + pairs[i].name() + "\":" + reasons;
    }
    return false;
  };

  if (!place(0)) throw GroupingError("no valid grouping into " + std::to_string(n_groups) + " groups; " + blocker);
  std::vector<SplitSpec> out(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) {
    out[g].group_id = static_cast<int>(g + 1);
    for (std::size_t i : groups[g]) out[g].held_out_pairs.push_back(pairs[i]);
  }
  return out;
}

std::string splits_to_json(const DatasetSplits& splits, const SplitSpec& spec) {
  json pairs = json::array();
  for (const auto& p : spec.held_out_pairs) pairs.push_back(p.name());
  json eval = json::object();
  for (const auto& [name, ids] : splits.eval) eval[name] = ids;
  json j = {{"spec", {{"group_id", spec.group_id}, {"held_out_pairs", pairs}}},
            {"train", splits.train},
            {"val", splits.val},
            {"eval", eval},
            {"removed_fraction", splits.removed_fraction}};
  return j.dump(1);
}

DatasetSplits splits_from_json(const std::string& text, const Lexicon& lex, SplitSpec* spec) {
  try {
    const json j = json::parse(text);
    DatasetSplits s;
    s.train = j.at("train").get<std::vector<std::int64_t>>();
    s.val = j.at("val").get<std::vector<std::int64_t>>();
    for (const auto& [name, ids] : j.at("eval").items()) s.eval[name] = ids.get<std::vector<std::int64_t>>();
    s.removed_fraction = j.at("removed_fraction").get<double>();
    if (spec) {
      spec->group_id = j.at("spec").at("group_id").get<int>();
      spec->held_out_pairs.clear();
      for (const auto& p : j.at("spec").at("held_out_pairs")) spec->held_out_pairs.push_back(parse_pair(lex, p.get<std::string>()));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed splits file: ") + e.what());
  }
}

}  // namespace compcap
