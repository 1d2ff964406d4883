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
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace compcap {

enum class WordClass : std::uint8_t { kNoun, kAdjective, kVerb };
enum class AdjectiveKind : std::uint8_t { kColor, kSize };

struct NounConcept {
  std::string lemma;
  std::vector<std::string> synonyms;  // singular surface forms, lemma first
  bool animate = false;
  std::vector<std::string> plurals;   // parallel to synonyms; filled by build_lexicon when empty
};

struct AdjectiveConcept {
  std::string lemma;
  std::vector<std::string> synonyms;  // lemma first
  AdjectiveKind kind = AdjectiveKind::kColor;
};

struct VerbConcept {
  std::string lemma;
  std::vector<std::string> synonyms;  // base forms, lemma first
  bool transitive = false;
  std::vector<std::string> third_person;  // parallel to synonyms
  std::vector<std::string> gerunds;       // parallel to synonyms
};

struct LexiconSpec {
  std::vector<NounConcept> nouns;
  std::vector<AdjectiveConcept> adjectives;
  std::vector<VerbConcept> verbs;
};

/// The token a surface form resolves to.
struct TokenInfo {
  WordClass word_class;
  std::uint16_t index;  // position in the class's concept list
  bool gerund = false;
};

class Lexicon {
 public:
  /// Fills missing inflections and indexes every surface form. Throws
  /// LexiconError when two concepts claim the same form.
  explicit Lexicon(LexiconSpec spec);

  const std::vector<NounConcept>& nouns() const { return spec_.nouns; }
  const std::vector<AdjectiveConcept>& adjectives() const { return spec_.adjectives; }
  const std::vector<VerbConcept>& verbs() const { return spec_.verbs; }

  std::optional<TokenInfo> lookup(std::string_view token) const;
  /// Lemma of any surface form, or nullopt for unknown tokens.
  std::optional<std::string> lemma(std::string_view token) const;

  std::optional<std::size_t> noun_index(std::string_view lemma) const;
  std::optional<std::size_t> adjective_index(std::string_view lemma) const;
  std::optional<std::size_t> verb_index(std::string_view lemma) const;

  const NounConcept& noun(std::string_view lemma) const;
  const AdjectiveConcept& adjective(std::string_view lemma) const;
  const VerbConcept& verb(std::string_view lemma) const;

  /// Every surface form, grouped by class in concept order.
  std::vector<std::string> surface_forms() const;

 private:
  LexiconSpec spec_;
  std::unordered_map<std::string, TokenInfo> index_;
};

/// 12 nouns, 7 adjectives, 6 verbs. Noun synonyms are defined by this library.
LexiconSpec default_lexicon_spec();
Lexicon build_lexicon();
Lexicon build_lexicon(LexiconSpec spec);

std::string third_person(std::string_view verb);
std::string gerund(std::string_view verb);
std::string plural(std::string_view noun);

enum class PairCategory : std::uint8_t {
  kColorAnimate,
  kColorInanimate,
  kSizeAnimate,
  kSizeInanimate,
  kVerbTransitive,
  kVerbIntransitive,
};

inline constexpr PairCategory kAllCategories[] = {
    PairCategory::kColorAnimate,   PairCategory::kColorInanimate,  PairCategory::kSizeAnimate,
    PairCategory::kSizeInanimate,  PairCategory::kVerbTransitive, PairCategory::kVerbIntransitive,
};

std::string_view category_name(PairCategory c);
std::optional<PairCategory> parse_category(std::string_view name);

/// Adjective-noun or noun-verb pair, written modifier first ("black cat", "eat man").
struct ConceptPair {
  std::string modifier;
  std::string noun;
  WordClass modifier_class = WordClass::kAdjective;
  PairCategory category = PairCategory::kColorAnimate;

  std::string name() const { return modifier + " " + noun; }
  friend bool operator==(const ConceptPair& a, const ConceptPair& b) {
    return a.modifier == b.modifier && a.noun == b.noun;
  }
};

/// Resolves "black cat" / "eat man" against the lexicon and derives the category.
ConceptPair make_pair(const Lexicon& lex, std::string_view modifier, std::string_view noun);
ConceptPair parse_pair(const Lexicon& lex, std::string_view text);

/// The 24 evaluation pairs in table order.
std::vector<ConceptPair> default_pairs(const Lexicon& lex);

}  // namespace compcap
