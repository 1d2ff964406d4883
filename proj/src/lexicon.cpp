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

#include "compcap/lexicon.hpp"

#include <algorithm>
#include <sstream>

#include "compcap/error.hpp"

namespace compcap {
namespace {

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string_view class_name(WordClass c) {
  switch (c) {
    case WordClass::kNoun: return "noun";
    case WordClass::kAdjective: return "adjective";
    case WordClass::kVerb: return "verb";
  }
  return "?";
}

template <typename C>
std::optional<std::size_t> find_lemma(const std::vector<C>& concepts, std::string_view lemma) {
  for (std::size_t i = 0; i < concepts.size(); ++i) {
    if (concepts[i].lemma == lemma) return i;
  }
  return std::nullopt;
}

template <typename C>
void ensure_lemma_first(C& c) {
  auto it = std::find(c.synonyms.begin(), c.synonyms.end(), c.lemma);
  if (it == c.synonyms.end()) {
    c.synonyms.insert(c.synonyms.begin(), c.lemma);
  } else if (it != c.synonyms.begin()) {
    std::rotate(c.synonyms.begin(), it, it + 1);
  }
}

}  // namespace

std::string third_person(std::string_view v) {
  std::string s(v);
  if (s.size() >= 2 && s.back() == 'y' && !is_vowel(s[s.size() - 2])) return s.substr(0, s.size() - 1) + "ies";
  if (ends_with(s, "s") || ends_with(s, "sh") || ends_with(s, "ch") || ends_with(s, "x") || ends_with(s, "z")) {
    return s + "es";
  }
  return s + "s";
}

std::string gerund(std::string_view v) {
  std::string s(v);
  if (ends_with(s, "ie")) return s.substr(0, s.size() - 2) + "ying";
  if (s.size() > 2 && s.back() == 'e' && s[s.size() - 2] != 'e') return s.substr(0, s.size() - 1) + "ing";
  return s + "ing";
}

std::string plural(std::string_view n) {
  static const std::unordered_map<std::string_view, std::string_view> irregular = {
      {"man", "men"}, {"woman", "women"}, {"child", "children"}, {"person", "people"}, {"mouse", "mice"},
  };
  if (auto it = irregular.find(n); it != irregular.end()) return std::string(it->second);
  std::string s(n);
  if (s.size() >= 2 && s.back() == 'y' && !is_vowel(s[s.size() - 2])) return s.substr(0, s.size() - 1) + "ies";
  if (ends_with(s, "s") || ends_with(s, "sh") || ends_with(s, "ch") || ends_with(s, "x")) return s + "es";
  return s + "s";
}

Lexicon::Lexicon(LexiconSpec spec) : spec_(std::move(spec)) {
  auto add = [&](const std::string& form, TokenInfo info, std::string_view owner) {
    if (form.empty()) throw LexiconError("empty surface form for " + std::string(owner));
    auto [it, inserted] = index_.emplace(form, info);
    if (inserted) return;
    const TokenInfo& prev = it->second;
    if (prev.word_class == info.word_class && prev.index == info.index) return;
    std::string prev_lemma;
    switch (prev.word_class) {
      case WordClass::kNoun: prev_lemma = spec_.nouns[prev.index].lemma; break;
      case WordClass::kAdjective: prev_lemma = spec_.adjectives[prev.index].lemma; break;
      case WordClass::kVerb: prev_lemma = spec_.verbs[prev.index].lemma; break;
    }
    std::ostringstream os;
    os << "synonym collision: \"" << form << "\" belongs to " << class_name(prev.word_class) << " \"" << prev_lemma
       << "\" and " << class_name(info.word_class) << " \"" << owner << "\"";
    throw LexiconError(os.str());
  };

  for (std::size_t i = 0; i < spec_.nouns.size(); ++i) {
    NounConcept& n = spec_.nouns[i];
    ensure_lemma_first(n);
    if (n.plurals.size() != n.synonyms.size()) {
      n.plurals.clear();
      for (const auto& s : n.synonyms) n.plurals.push_back(plural(s));
    }
    const TokenInfo info{WordClass::kNoun, static_cast<std::uint16_t>(i)};
    for (const auto& s : n.synonyms) add(s, info, n.lemma);
    for (const auto& s : n.plurals) add(s, info, n.lemma);
  }
  for (std::size_t i = 0; i < spec_.adjectives.size(); ++i) {
    AdjectiveConcept& a = spec_.adjectives[i];
    ensure_lemma_first(a);
    for (const auto& s : a.synonyms) add(s, {WordClass::kAdjective, static_cast<std::uint16_t>(i)}, a.lemma);
  }
  for (std::size_t i = 0; i < spec_.verbs.size(); ++i) {
    VerbConcept& v = spec_.verbs[i];
    ensure_lemma_first(v);
    if (v.third_person.size() != v.synonyms.size()) {
      v.third_person.clear();
      for (const auto& s : v.synonyms) v.third_person.push_back(third_person(s));
    }
    if (v.gerunds.size() != v.synonyms.size()) {
      v.gerunds.clear();
      for (const auto& s : v.synonyms) v.gerunds.push_back(gerund(s));
    }
    const TokenInfo base{WordClass::kVerb, static_cast<std::uint16_t>(i)};
    for (const auto& s : v.synonyms) add(s, base, v.lemma);
    for (const auto& s : v.third_person) add(s, base, v.lemma);
    for (const auto& s : v.gerunds) add(s, {WordClass::kVerb, static_cast<std::uint16_t>(i), true}, v.lemma);
  }
}

std::optional<TokenInfo> Lexicon::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> Lexicon::lemma(std::string_view token) const {
  const auto info = lookup(token);
  if (!info) return std::nullopt;
  switch (info->word_class) {
    case WordClass::kNoun: return spec_.nouns[info->index].lemma;
    case WordClass::kAdjective: return spec_.adjectives[info->index].lemma;
    case WordClass::kVerb: return spec_.verbs[info->index].lemma;
  }
  return std::nullopt;
}

std::optional<std::size_t> Lexicon::noun_index(std::string_view l) const { return find_lemma(spec_.nouns, l); }
std::optional<std::size_t> Lexicon::adjective_index(std::string_view l) const {
  return find_lemma(spec_.adjectives, l);
}
std::optional<std::size_t> Lexicon::verb_index(std::string_view l) const { return find_lemma(spec_.verbs, l); }

const NounConcept& Lexicon::noun(std::string_view l) const {
  if (auto i = noun_index(l)) return spec_.nouns[*i];
  throw LexiconError("unknown noun lemma \"" + std::string(l) + "\"");
}
const AdjectiveConcept& Lexicon::adjective(std::string_view l) const {
  if (auto i = adjective_index(l)) return spec_.adjectives[*i];
  throw LexiconError("unknown adjective lemma \"" + std::string(l) + "\"");
}
const VerbConcept& Lexicon::verb(std::string_view l) const {
  if (auto i = verb_index(l)) return spec_.verbs[*i];
  throw LexiconError("unknown verb lemma \"" + std::string(l) + "\"");
}

std::vector<std::string> Lexicon::surface_forms() const {
  std::vector<std::string> out;
  for (const auto& n : spec_.nouns) {
    out.insert(out.end(), n.synonyms.begin(), n.synonyms.end());
    out.insert(out.end(), n.plurals.begin(), n.plurals.end());
  }
  for (const auto& a : spec_.adjectives) out.insert(out.end(), a.synonyms.begin(), a.synonyms.end());
  for (const auto& v : spec_.verbs) {
    out.insert(out.end(), v.synonyms.begin(), v.synonyms.end());
    out.insert(out.end(), v.third_person.begin(), v.third_person.end());
    out.insert(out.end(), v.gerunds.begin(), v.gerunds.end());
  }
  return out;
}

LexiconSpec default_lexicon_spec() {
  LexiconSpec s;
  s.nouns = {
      {"woman", {"woman", "lady"}, true, {}},
      {"man", {"man", "guy"}, true, {}},
      {"dog", {"dog", "puppy"}, true, {}},
      {"cat", {"cat", "kitten"}, true, {}},
      {"horse", {"horse", "pony"}, true, {}},
      {"bird", {"bird"}, true, {}},
      {"child", {"child", "kid"}, true, {}},
      {"bus", {"bus"}, false, {}},
      {"plane", {"plane", "airplane", "jet"}, false, {}},
      {"truck", {"truck"}, false, {}},
      {"table", {"table", "desk"}, false, {}},
      {"boat", {"boat", "ship"}, false, {}},
  };
  s.adjectives = {
      {"big",
       {"big", "large", "tall", "huge", "wide", "great", "broad", "enormous", "expansive", "extensive", "giant",
        "gigantic", "massive", "vast"},
       AdjectiveKind::kSize},
      {"small",
       {"small", "little", "narrow", "short", "tinier", "tiny", "thin", "compact", "mini", "petite", "skinny"},
       AdjectiveKind::kSize},
      {"red", {"red", "dark-red", "light-red"}, AdjectiveKind::kColor},
      {"brown", {"brown", "brownish", "dark-brown", "light-brown"}, AdjectiveKind::kColor},
      {"blue", {"blue", "blueish", "light-blue", "dark-blue"}, AdjectiveKind::kColor},
      {"black", {"black"}, AdjectiveKind::kColor},
      {"white", {"white"}, AdjectiveKind::kColor},
  };
  s.verbs = {
      {"eat", {"eat", "chew", "bite", "graze"}, true, {}, {}},
      {"lie", {"lie", "lay"}, false, {}, {}},
      {"ride", {"ride"}, true, {}, {}},
      {"fly", {"fly"}, false, {}, {}},
      {"hold", {"hold", "carry"}, true, {}, {}},
      {"stand", {"stand"}, false, {}, {}},
  };
  return s;
}

Lexicon build_lexicon() { return Lexicon(default_lexicon_spec()); }
Lexicon build_lexicon(LexiconSpec spec) { return Lexicon(std::move(spec)); }

std::string_view category_name(PairCategory c) {
  switch (c) {
    case PairCategory::kColorAnimate: return "color-animate";
    case PairCategory::kColorInanimate: return "color-inanimate";
    case PairCategory::kSizeAnimate: return "size-animate";
    case PairCategory::kSizeInanimate: return "size-inanimate";
    case PairCategory::kVerbTransitive: return "verb-transitive";
    case PairCategory::kVerbIntransitive: return "verb-intransitive";
  }
  return "?";
}

std::optional<PairCategory> parse_category(std::string_view name) {
  for (PairCategory c : kAllCategories) {
    if (category_name(c) == name) return c;
  }
  return std::nullopt;
}

ConceptPair make_pair(const Lexicon& lex, std::string_view modifier, std::string_view noun) {
  const NounConcept& n = lex.noun(noun);
  ConceptPair p;
  p.modifier = std::string(modifier);
  p.noun = n.lemma;
  if (auto ai = lex.adjective_index(modifier)) {
    const AdjectiveConcept& a = lex.adjectives()[*ai];
    p.modifier_class = WordClass::kAdjective;
    if (a.kind == AdjectiveKind::kColor) {
      p.category = n.animate ? PairCategory::kColorAnimate : PairCategory::kColorInanimate;
    } else {
      p.category = n.animate ? PairCategory::kSizeAnimate : PairCategory::kSizeInanimate;
    }
  } else if (auto vi = lex.verb_index(modifier)) {
    p.modifier_class = WordClass::kVerb;
    p.category = lex.verbs()[*vi].transitive ? PairCategory::kVerbTransitive : PairCategory::kVerbIntransitive;
  } else {
    throw LexiconError("pair modifier \"" + std::string(modifier) + "\" is neither an adjective nor a verb lemma");
  }
  return p;
}

ConceptPair parse_pair(const Lexicon& lex, std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string mod, noun, extra;
  if (!(is >> mod >> noun) || (is >> extra)) {
    throw LexiconError("pair must be \"MODIFIER NOUN\", got \"" + std::string(text) + "\"");
  }
  return make_pair(lex, mod, noun);
}

std::vector<ConceptPair> default_pairs(const Lexicon& lex) {
  static const char* const kPairs[] = {
      "black cat",   "big bird",   "red bus",    "small plane", "eat man",    "lie woman",
      "white truck", "small cat",  "brown dog",  "big plane",   "ride woman", "fly bird",
      "white horse", "big cat",    "blue bus",   "small table", "hold child", "stand bird",
      "black bird",  "small dog",  "white boat", "stand child", "big truck",  "eat horse",
  };
  std::vector<ConceptPair> out;
  for (const char* p : kPairs) out.push_back(parse_pair(lex, p));
  return out;
}

}  // namespace compcap
