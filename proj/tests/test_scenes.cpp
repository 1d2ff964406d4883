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
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "compcap/error.hpp"
#include "compcap/scenes.hpp"
#include "compcap/splits.hpp"
#include "compcap/text.hpp"
#include "doctest.h"

using namespace compcap;

namespace {

GenConfig noiseless() {
  GenConfig cfg;
  cfg.noise_sigma = 0.0;
  return cfg;
}

bool mentions(const std::string& caption, const std::vector<std::string>& forms) {
  for (const auto& t : tokenize(caption)) {
    if (std::find(forms.begin(), forms.end(), t) != forms.end()) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("sample_scene is deterministic and covers the lexicon") {
  const Lexicon lex = build_lexicon();
  const GenConfig cfg;
  Rng a(42), b(42);
  const auto sa = sample_scene(a, lex, cfg);
  const auto sb = sample_scene(b, lex, cfg);
  CHECK(sa.objects == sb.objects);

  Rng rng(5);
  std::set<std::string> seen;
  for (int i = 0; i < 10000; ++i) {
    const auto s = sample_scene(rng, lex, cfg);
    const SceneObject& o = s.objects[0];
    seen.insert(o.category);
    if (o.action && lex.verb(*o.action).transitive) {
      CHECK(o.patient.has_value());
      CHECK(*o.patient != o.category);
    }
    if (o.patient) CHECK(lex.verb(*o.action).transitive);
    if (o.action) CHECK(lex.noun(o.category).animate);
    if (o.color) CHECK(lex.adjective(*o.color).kind == AdjectiveKind::kColor);
    if (o.size) CHECK(lex.adjective(*o.size).kind == AdjectiveKind::kSize);
  }
  CHECK(seen.size() == lex.nouns().size());
}

TEST_CASE("render_regions") {
  const Lexicon lex = build_lexicon();
  const FeatureLayout layout = feature_layout(lex);
  CHECK(layout.width() == 13 + 5 + 2 + 6 + 12);

  SceneInstance s;
  s.objects.push_back({.category = "cat", .color = "black"});
  GenConfig cfg = noiseless();
  Rng rng(1);
  const Tensor r = render_regions(s, lex, cfg, rng);
  REQUIRE(r.rows() == cfg.regions);
  REQUIRE(r.cols() == cfg.feature_dim);

  SUBCASE("noiseless rendering is exact one-hot blocks") {
    std::size_t object_rows = 0, background_rows = 0;
    for (std::size_t i = 0; i < r.rows(); ++i) {
      std::vector<double> want(cfg.feature_dim, 0.0);
      if (r.at(i, layout.category - 1) == 1.0) {
        want[layout.category - 1] = 1.0;
        ++background_rows;
      } else {
        want[*lex.noun_index("cat")] = 1.0;
        want[layout.color_offset() + 3] = 1.0;  // colors: red brown blue black white
        ++object_rows;
      }
      CHECK(std::vector<double>(r.row(i).begin(), r.row(i).end()) == want);
    }
    CHECK(object_rows == 1);
    CHECK(background_rows == 3);
  }

  SUBCASE("changing the color touches only the color block") {
    SceneInstance t = s;
    t.objects[0].color = "red";
    Rng r1(9), r2(9);
    const Tensor a = render_regions(s, lex, cfg, r1);
    const Tensor b = render_regions(t, lex, cfg, r2);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < a.cols(); ++j) {
        const bool in_color = j >= layout.color_offset() && j < layout.size_offset();
        if (!in_color) CHECK(a.at(i, j) == b.at(i, j));
      }
    }
    CHECK_FALSE(a == b);
  }

  SUBCASE("noise is seeded") {
    cfg.noise_sigma = 0.1;
    Rng r1(3), r2(3);
    CHECK(render_regions(s, lex, cfg, r1) == render_regions(s, lex, cfg, r2));
  }

  SUBCASE("feature width too small") {
    cfg.feature_dim = 10;
    CHECK_THROWS_AS(render_regions(s, lex, cfg, rng), ConfigError);
  }
}

TEST_CASE("distinct symbolic scenes render to distinct matrices") {
  const Lexicon lex = build_lexicon();
  const GenConfig cfg = noiseless();
  std::map<std::vector<double>, std::vector<SceneObject>> seen;
  for (int i = 0; i < 3000; ++i) {
    const SceneInstance s = generate_scene(i, lex, cfg);
    const std::vector<double> key(s.regions.span().begin(), s.regions.span().end());
    auto [it, inserted] = seen.emplace(key, s.objects);
    if (!inserted) CHECK(it->second == s.objects);
  }
}

TEST_CASE("caption templates") {
  const Lexicon lex = build_lexicon();
  SceneInstance s;
  s.objects.push_back({.category = "cat", .color = "black"});

  SUBCASE("forced color mention") {
    GenConfig cfg;
    cfg.p_color = 1.0;
    cfg.p_size = 0.0;
    cfg.p_verb = 0.0;
    Rng rng(2);
    for (const auto& c : generate_captions(s, rng, lex, cfg)) {
      const auto toks = tokenize(c);
      bool adjacent = false;
      for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
        adjacent |= toks[i] == "black" && lex.lemma(toks[i + 1]) == "cat";
      }
      CHECK_MESSAGE(adjacent, c);
    }
  }

  SUBCASE("no attributes gives bare noun phrases") {
    GenConfig cfg;
    cfg.p_color = cfg.p_size = cfg.p_verb = 0.0;
    s.objects[0].size = "big";
    s.objects[0].action = "stand";
    Rng rng(2);
    for (int rep = 0; rep < 20; ++rep) {
      for (const auto& c : generate_captions(s, rng, lex, cfg)) {
        for (const auto& t : tokenize(c)) {
          const bool ok = t == "a" || t == "there" || t == "is" || lex.lemma(t) == "cat";
          CHECK_MESSAGE(ok, c);
        }
      }
    }
  }
}

TEST_CASE("agreement calibration") {
  const Lexicon lex = build_lexicon();
  const GenConfig cfg;
  std::size_t color_scenes = 0, color_mentions = 0;
  std::size_t size_scenes = 0, size_mentions = 0;
  std::size_t verb_scenes = 0, verb_mentions = 0;
  for (int i = 0; i < 10000; ++i) {
    const SceneInstance s = generate_scene(i, lex, cfg);
    const SceneObject& o = s.objects[0];
    for (const auto& c : s.captions) {
      if (o.color) color_mentions += mentions(c, lex.adjective(*o.color).synonyms);
      if (o.size) size_mentions += mentions(c, lex.adjective(*o.size).synonyms);
      if (o.action) {
        const auto& v = lex.verb(*o.action);
        verb_mentions += mentions(c, v.third_person) || mentions(c, v.gerunds);
      }
    }
    color_scenes += o.color.has_value();
    size_scenes += o.size.has_value();
    verb_scenes += o.action.has_value();
  }
  const double per5 = static_cast<double>(color_mentions) / static_cast<double>(color_scenes);
  CHECK(per5 == doctest::Approx(1.57).epsilon(0.15 / 1.57));
  const double k = static_cast<double>(cfg.captions);
  CHECK(std::abs(static_cast<double>(color_mentions) / (k * color_scenes) - cfg.p_color) < 0.05);
  CHECK(std::abs(static_cast<double>(size_mentions) / (k * size_scenes) - cfg.p_size) < 0.05);
  CHECK(std::abs(static_cast<double>(verb_mentions) / (k * verb_scenes) - cfg.p_verb) < 0.05);
}

TEST_CASE("mention probability respects extremes") {
  CHECK(mention_probability(1.0, 2.0, 0.1) == 1.0);
  CHECK(mention_probability(0.0, 2.0, 0.9) == 0.0);
  CHECK(mention_probability(0.31, 2.0, 1.0) == doctest::Approx(0.93));
}

TEST_CASE("generated captions round-trip through the pair matcher") {
  const Lexicon lex = build_lexicon();
  std::vector<ConceptPair> all;
  for (const auto& n : lex.nouns()) {
    for (const auto& a : lex.adjectives()) all.push_back(make_pair(lex, a.lemma, n.lemma));
    for (const auto& v : lex.verbs()) all.push_back(make_pair(lex, v.lemma, n.lemma));
  }
  const GenConfig cfg;
  for (int i = 0; i < 400; ++i) {
    const SceneInstance s = generate_scene(i, lex, cfg);
    const std::string& noun = s.objects[0].category;
    for (const auto& c : s.captions) {
      std::set<std::string> realized;
      for (const auto& t : tokenize(c)) {
        const auto info = lex.lookup(t);
        if (info && info->word_class != WordClass::kNoun) realized.insert(*lex.lemma(t) + " " + noun);
      }
      const TaggedCaption tagged = tag_caption(c, lex);
      for (const auto& p : all) {
        CHECK_MESSAGE(match_pair(tagged, p, lex) == (realized.count(p.name()) == 1), c << " / " << p.name());
      }
    }
  }
}

TEST_CASE("generate_dataset") {
  const Lexicon lex = build_lexicon();
  GenConfig cfg;
  const auto three = generate_dataset(3, cfg, lex);
  REQUIRE(three.size() == 3);
  for (std::int64_t i = 0; i < 3; ++i) {
    CHECK(three[i].id == i);
    CHECK(three[i].captions.size() == cfg.captions);
    CHECK(three[i].regions.rows() == cfg.regions);
  }
  std::ostringstream a, b;
  write_dataset(a, generate_dataset(50, cfg, lex));
  write_dataset(b, generate_dataset(50, cfg, lex));
  CHECK(a.str() == b.str());
  cfg.seed = 2;
  std::ostringstream c;
  write_dataset(c, generate_dataset(50, cfg, lex));
  CHECK(a.str() != c.str());
}

TEST_CASE("pair coverage of a large corpus") {
  // Coverage scales with n; 8000 scenes give every default pair 30+ scenes
  // while 2000 keep each held-out group under 5% of the data.
  const Lexicon lex = build_lexicon();
  GenConfig cfg;
  const auto pairs = default_pairs(lex);
  const auto data = generate_dataset(8000, cfg, lex);
  const auto matches = scene_pair_matches(data, pairs, lex);
  std::vector<std::size_t> counts(pairs.size(), 0);
  for (const auto& m : matches)
    for (std::size_t p : m) ++counts[p];
  for (std::size_t p = 0; p < pairs.size(); ++p) CHECK_MESSAGE(counts[p] >= 30, pairs[p].name() << " " << counts[p]);
}

TEST_CASE("dataset JSON round trip and lenient ingestion") {
  const Lexicon lex = build_lexicon();
  const auto data = generate_dataset(20, GenConfig{}, lex);
  std::stringstream ss;
  write_dataset(ss, data);
  const auto back = read_dataset(ss);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].id == data[i].id);
    CHECK(back[i].objects == data[i].objects);
    CHECK(back[i].regions == data[i].regions);
    CHECK(back[i].captions == data[i].captions);
  }

  std::istringstream external(R"({"id": 7, "regions": [[0.5, 1.0], [0, 0]], "captions": ["Two dogs on a beach."]})"
                              "\n\n"
                              R"({"id": 8, "objects": [{"category": "dog", "color": null}], "regions": [[1, 2]], "captions": ["a dog"]})");
  const auto ext = read_dataset(external);
  REQUIRE(ext.size() == 2);
  CHECK(ext[0].objects.empty());
  CHECK(ext[0].regions.rows() == 2);
  CHECK(ext[1].objects[0].category == "dog");
  CHECK_FALSE(ext[1].objects[0].color.has_value());
  CHECK(ext[1].objects[0].color_salience == 1.0);

  std::istringstream ragged(R"({"id": 1, "regions": [[1, 2], [3]], "captions": ["a"]})");
  CHECK_THROWS_AS(read_dataset(ragged), IoError);
  std::istringstream no_captions(R"({"id": 1, "regions": [[1]], "captions": []})");
  CHECK_THROWS_AS(read_dataset(no_captions), IoError);
}
