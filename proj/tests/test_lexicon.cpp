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

#include <algorithm>
#include <set>

#include "compcap/error.hpp"
#include "compcap/lexicon.hpp"
#include "compcap/text.hpp"
#include "doctest.h"

using namespace compcap;

TEST_CASE("default lexicon lookups") {
  const Lexicon lex = build_lexicon();
  CHECK(lex.lemma("large") == "big");
  CHECK(lex.lemma("lay") == "lie");
  CHECK(lex.lemma("black") == "black");
  CHECK(lex.lemma("dark-red") == "red");
  CHECK(lex.lemma("grazing") == "eat");
  CHECK(lex.lemma("carries") == "hold");
  CHECK(lex.lemma("lying") == "lie");
  CHECK(lex.lemma("women") == "woman");
  CHECK(lex.lemma("children") == "child");
  CHECK(lex.lemma("jets") == "plane");
  CHECK_FALSE(lex.lemma("sofa").has_value());
  CHECK(lex.nouns().size() == 12);
  CHECK(lex.adjectives().size() == 7);
  CHECK(lex.verbs().size() == 6);
}

TEST_CASE("adjective and verb synonym sets") {
  const Lexicon lex = build_lexicon();
  CHECK(lex.adjective("big").synonyms.size() == 14);
  CHECK(lex.adjective("small").synonyms.size() == 11);
  CHECK(lex.adjective("white").synonyms.size() == 1);
  CHECK(lex.verb("eat").synonyms == std::vector<std::string>{"eat", "chew", "bite", "graze"});
  CHECK(lex.verb("eat").transitive);
  CHECK_FALSE(lex.verb("stand").transitive);
  CHECK(lex.adjective("blue").kind == AdjectiveKind::kColor);
  CHECK(lex.adjective("small").kind == AdjectiveKind::kSize);
}

TEST_CASE("every inflected form maps back to exactly one lemma") {
  const Lexicon lex = build_lexicon();
  const auto forms = lex.surface_forms();
  const std::set<std::string> unique(forms.begin(), forms.end());
  CHECK(unique.size() == forms.size());
  for (const auto& f : forms) CHECK(lex.lookup(f).has_value());
}

TEST_CASE("inflection rules") {
  CHECK(third_person("fly") == "flies");
  CHECK(third_person("carry") == "carries");
  CHECK(third_person("lay") == "lays");
  CHECK(gerund("lie") == "lying");
  CHECK(gerund("ride") == "riding");
  CHECK(gerund("graze") == "grazing");
  CHECK(gerund("stand") == "standing");
  CHECK(plural("bus") == "buses");
  CHECK(plural("puppy") == "puppies");
  CHECK(plural("guy") == "guys");
  CHECK(plural("man") == "men");
}

TEST_CASE("overlapping synonyms are rejected") {
  LexiconSpec spec = default_lexicon_spec();
  spec.adjectives[1].synonyms.push_back("large");
  try {
    build_lexicon(spec);
    FAIL("expected a lexicon error");
  } catch (const LexiconError& e) {
    const std::string what = e.what();
    CHECK(what.find("large") != std::string::npos);
    CHECK(what.find("big") != std::string::npos);
    CHECK(what.find("small") != std::string::npos);
  }
}

TEST_CASE("default pairs and categories") {
  const Lexicon lex = build_lexicon();
  const auto pairs = default_pairs(lex);
  REQUIRE(pairs.size() == 24);
  CHECK(pairs[0].name() == "black cat");
  CHECK(pairs[0].category == PairCategory::kColorAnimate);
  CHECK(pairs[2].category == PairCategory::kColorInanimate);
  CHECK(pairs[3].category == PairCategory::kSizeInanimate);
  CHECK(pairs[4].category == PairCategory::kVerbTransitive);
  CHECK(pairs[5].category == PairCategory::kVerbIntransitive);
  CHECK(pairs[20].name() == "white boat");
  for (PairCategory c : kAllCategories) {
    CHECK(std::count_if(pairs.begin(), pairs.end(), [c](const ConceptPair& p) { return p.category == c; }) == 4);
    CHECK(parse_category(category_name(c)) == c);
  }
  CHECK_THROWS_AS(parse_pair(lex, "purple cat"), LexiconError);
}

TEST_CASE("tokenizer") {
  CHECK(tokenize("A Black cat, sitting!") == std::vector<std::string>{"a", "black", "cat", "sitting"});
  CHECK(tokenize("a dark-red bus - parked") == std::vector<std::string>{"a", "dark-red", "bus", "parked"});
  CHECK(normalize_caption("  The   CAT. ") == "the cat");
}
