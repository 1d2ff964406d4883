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

#include "compcap/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "compcap/error.hpp"
#include "json.hpp"

namespace compcap {
namespace {

using nlohmann::json;

bool bernoulli(Rng& rng, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

std::vector<std::size_t> adjectives_of_kind(const Lexicon& lex, AdjectiveKind kind) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < lex.adjectives().size(); ++i) {
    if (lex.adjectives()[i].kind == kind) out.push_back(i);
  }
  return out;
}

std::size_t index_within(const std::vector<std::size_t>& ids, std::size_t id) {
  return static_cast<std::size_t>(std::find(ids.begin(), ids.end(), id) - ids.begin());
}

bool starts_with_vowel(const std::string& w) { return !w.empty() && std::string_view("aeiou").find(w[0]) != std::string_view::npos; }

std::string article_for(const std::string& next) { return starts_with_vowel(next) ? "an" : "a"; }

json opt(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::string> opt_string(const json& o, const char* key) {
  auto it = o.find(key);
  if (it == o.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw IoError(std::string("object field \"") + key + "\" must be a string or null");
  return it->get<std::string>();
}

double opt_number(const json& o, const char* key, double fallback) {
  auto it = o.find(key);
  if (it == o.end() || it->is_null()) return fallback;
  if (!it->is_number()) throw IoError(std::string("object field \"") + key + "\" must be a number");
  return it->get<double>();
}

}  // namespace

void GenConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must be in [0, 1]");
  };
  prob(p_color, "p_color");
  prob(p_size, "p_size");
  prob(p_verb, "p_verb");
  prob(color_presence, "color_presence");
  prob(size_presence, "size_presence");
  prob(action_presence, "action_presence");
  prob(patient_mention, "patient_mention");
  prob(distractor_prob, "distractor_prob");
  prob(there_is_prob, "there_is_prob");
  prob(distractor_prominence, "distractor_prominence");
  if (regions < 1) throw ConfigError("regions (R) must be >= 1");
  if (captions < 1) throw ConfigError("captions (K) must be >= 1");
  if (feature_dim < 1) throw ConfigError("feature_dim (I) must be >= 1");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
  if (!(salience_exponent >= 0.0)) throw ConfigError("salience_exponent must be >= 0");
}

FeatureLayout feature_layout(const Lexicon& lex) {
  FeatureLayout l;
  l.category = lex.nouns().size() + 1;
  l.color = adjectives_of_kind(lex, AdjectiveKind::kColor).size();
  l.size = adjectives_of_kind(lex, AdjectiveKind::kSize).size();
  l.action = lex.verbs().size();
  l.patient = lex.nouns().size();
  return l;
}

double effective_salience_exponent(double p, double g) {
  if (p <= 0.0) return g;
  return std::min(g, 1.0 / p - 1.0);
}

double mention_probability(double p, double g, double salience) {
  const double e = effective_salience_exponent(p, g);
  return std::clamp(p * (e + 1.0) * std::pow(salience, e), 0.0, 1.0);
}

SceneObject sample_object(Rng& rng, const Lexicon& lex, const GenConfig& cfg) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SceneObject o;
  const auto& nouns = lex.nouns();
  const std::size_t ni = std::uniform_int_distribution<std::size_t>(0, nouns.size() - 1)(rng);
  o.category = nouns[ni].lemma;
  const auto colors = adjectives_of_kind(lex, AdjectiveKind::kColor);
  const auto sizes = adjectives_of_kind(lex, AdjectiveKind::kSize);
  if (!colors.empty() && bernoulli(rng, cfg.color_presence)) {
    o.color = lex.adjectives()[pick(rng, colors)].lemma;
    o.color_salience = unit(rng);
  }
  if (!sizes.empty() && bernoulli(rng, cfg.size_presence)) {
    o.size = lex.adjectives()[pick(rng, sizes)].lemma;
    o.size_salience = unit(rng);
  }
  if (nouns[ni].animate && !lex.verbs().empty() && bernoulli(rng, cfg.action_presence)) {
    const auto& v = pick(rng, lex.verbs());
    o.action = v.lemma;
    o.action_salience = unit(rng);
    if (v.transitive && nouns.size() > 1) {
      std::size_t pi = std::uniform_int_distribution<std::size_t>(0, nouns.size() - 2)(rng);
      if (pi >= ni) ++pi;
      o.patient = nouns[pi].lemma;
    }
  }
  return o;
}

SceneInstance sample_scene(Rng& rng, const Lexicon& lex, const GenConfig& cfg) {
  if (lex.nouns().empty()) throw LexiconError("cannot sample scenes from a lexicon without nouns");
  SceneInstance s;
  s.objects.push_back(sample_object(rng, lex, cfg));
  if (cfg.regions > 1 && bernoulli(rng, cfg.distractor_prob)) {
    SceneObject d;
    d.category = lex.nouns()[std::uniform_int_distribution<std::size_t>(0, lex.nouns().size() - 1)(rng)].lemma;
    d.prominence = cfg.distractor_prominence;
    s.objects.push_back(std::move(d));
  }
  return s;
}

Tensor render_regions(const SceneInstance& scene, const Lexicon& lex, const GenConfig& cfg, Rng& rng) {
  const FeatureLayout layout = feature_layout(lex);
  if (cfg.feature_dim < layout.width()) {
    throw ConfigError("feature_dim I=" + std::to_string(cfg.feature_dim) + " is smaller than the " +
                      std::to_string(layout.width()) + " columns needed by the lexicon");
  }
  if (scene.objects.size() > cfg.regions) {
    throw ConfigError("scene has " + std::to_string(scene.objects.size()) + " objects but R=" +
                      std::to_string(cfg.regions));
  }
  const auto colors = adjectives_of_kind(lex, AdjectiveKind::kColor);
  const auto sizes = adjectives_of_kind(lex, AdjectiveKind::kSize);
  auto hot = [](double salience) { return 0.2 + 0.8 * salience; };

  Tensor out({cfg.regions, cfg.feature_dim});
  std::vector<std::size_t> order(cfg.regions);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 0; k < cfg.regions; ++k) {
    auto row = out.row(order[k]);
    if (k >= scene.objects.size()) {
      row[layout.category - 1] = 1.0;
      continue;
    }
    const SceneObject& o = scene.objects[k];
    const auto ni = lex.noun_index(o.category);
    if (!ni) throw LexiconError("scene object has unknown category \"" + o.category + "\"");
    row[*ni] = o.prominence;
    if (o.color) {
      row[layout.color_offset() + index_within(colors, *lex.adjective_index(*o.color))] = hot(o.color_salience);
    }
    if (o.size) row[layout.size_offset() + index_within(sizes, *lex.adjective_index(*o.size))] = hot(o.size_salience);
    if (o.action) row[layout.action_offset() + *lex.verb_index(*o.action)] = hot(o.action_salience);
    if (o.patient) row[layout.patient_offset() + *lex.noun_index(*o.patient)] = 1.0;
  }
  if (cfg.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (double& v : out.span()) v += noise(rng);
  }
  return out;
}

std::vector<std::string> generate_captions(const SceneInstance& scene, Rng& rng, const Lexicon& lex,
                                           const GenConfig& cfg) {
  if (scene.objects.empty()) throw Error("cannot caption a scene without objects");
  const SceneObject& o = scene.objects[0];
  const NounConcept& noun = lex.noun(o.category);
  const double g = cfg.salience_exponent;
  std::vector<std::string> out;
  out.reserve(cfg.captions);
  for (std::size_t k = 0; k < cfg.captions; ++k) {
    const bool say_color = o.color && bernoulli(rng, mention_probability(cfg.p_color, g, o.color_salience));
    const bool say_size = o.size && bernoulli(rng, mention_probability(cfg.p_size, g, o.size_salience));
    const bool say_verb = o.action && bernoulli(rng, mention_probability(cfg.p_verb, g, o.action_salience));

    std::vector<std::string> np;
    if (say_size) np.push_back(pick(rng, lex.adjective(*o.size).synonyms));
    if (say_color) np.push_back(pick(rng, lex.adjective(*o.color).synonyms));
    np.push_back(pick(rng, noun.synonyms));

    std::vector<std::string> words;
    if (!say_size && !say_verb && bernoulli(rng, cfg.there_is_prob)) {
      words = {"there", "is"};
    }
    words.push_back(article_for(np.front()));
    words.insert(words.end(), np.begin(), np.end());
    if (say_verb) {
      const VerbConcept& v = lex.verb(*o.action);
      const std::size_t form = std::uniform_int_distribution<std::size_t>(0, v.synonyms.size() - 1)(rng);
      if (bernoulli(rng, 0.5)) {
        words.push_back("is");
        words.push_back(v.gerunds[form]);
      } else {
        words.push_back(v.third_person[form]);
      }
      if (o.patient && bernoulli(rng, cfg.patient_mention)) {
        const std::string p = pick(rng, lex.noun(*o.patient).synonyms);
        words.push_back(article_for(p));
        words.push_back(p);
      }
    }
    std::string caption;
    for (const auto& w : words) caption += (caption.empty() ? "" : " ") + w;
    out.push_back(std::move(caption));
  }
  return out;
}

SceneInstance generate_scene(std::int64_t id, const Lexicon& lex, const GenConfig& cfg) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(static_cast<std::uint64_t>(id) >> 32)};
  Rng rng(seq);
  SceneInstance s = sample_scene(rng, lex, cfg);
  s.id = id;
  s.captions = generate_captions(s, rng, lex, cfg);
  s.regions = render_regions(s, lex, cfg, rng);
  return s;
}

std::vector<SceneInstance> generate_dataset(std::size_t n_scenes, const GenConfig& cfg, const Lexicon& lex) {
  if (n_scenes < 1) throw ConfigError("n_scenes must be >= 1");
  cfg.validate();
  std::vector<SceneInstance> out;
  out.reserve(n_scenes);
  for (std::size_t i = 0; i < n_scenes; ++i) out.push_back(generate_scene(static_cast<std::int64_t>(i), lex, cfg));
  return out;
}

std::string scene_to_json(const SceneInstance& s) {
  json objects = json::array();
  for (const auto& o : s.objects) {
    objects.push_back({{"category", o.category},
                       {"color", opt(o.color)},
                       {"size", opt(o.size)},
                       {"action", opt(o.action)},
                       {"patient", opt(o.patient)},
                       {"color_salience", o.color_salience},
                       {"size_salience", o.size_salience},
                       {"action_salience", o.action_salience},
                       {"prominence", o.prominence}});
  }
  json regions = json::array();
  for (std::size_t r = 0; r < s.regions.rows(); ++r) {
    auto row = s.regions.row(r);
    regions.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return json{{"id", s.id}, {"objects", objects}, {"regions", regions}, {"captions", s.captions}}.dump();
}

void write_dataset(std::ostream& os, const std::vector<SceneInstance>& scenes) {
  for (const auto& s : scenes) os << scene_to_json(s) << '\n';
}

void write_dataset(const std::string& path, const std::vector<SceneInstance>& scenes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write dataset " + path);
  write_dataset(os, scenes);
  if (!os) throw IoError("failed writing dataset " + path);
}

std::vector<SceneInstance> read_dataset(std::istream& is) {
  std::vector<SceneInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "dataset line " + std::to_string(lineno) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError(where + e.what());
    }
    try {
      SceneInstance s;
      s.id = j.at("id").get<std::int64_t>();
      if (auto it = j.find("objects"); it != j.end() && !it->is_null()) {
        for (const auto& o : *it) {
          SceneObject so;
          so.category = o.value("category", std::string());
          so.color = opt_string(o, "color");
          so.size = opt_string(o, "size");
          so.action = opt_string(o, "action");
          so.patient = opt_string(o, "patient");
          so.color_salience = opt_number(o, "color_salience", 1.0);
          so.size_salience = opt_number(o, "size_salience", 1.0);
          so.action_salience = opt_number(o, "action_salience", 1.0);
          so.prominence = opt_number(o, "prominence", 1.0);
          s.objects.push_back(std::move(so));
        }
      }
      const auto& rows = j.at("regions");
      if (!rows.is_array() || rows.empty()) throw IoError(where + "regions must be a non-empty array of rows");
      const std::size_t width = rows[0].size();
      std::vector<double> data;
      for (const auto& r : rows) {
        if (!r.is_array() || r.size() != width || width == 0) throw IoError(where + "regions must be rectangular");
        for (const auto& v : r) data.push_back(v.get<double>());
      }
      s.regions = Tensor({rows.size(), width}, std::move(data));
      s.captions = j.at("captions").get<std::vector<std::string>>();
      if (s.captions.empty()) throw IoError(where + "scene has no captions");
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw IoError(where + e.what());
    }
  }
  return out;
}

std::vector<SceneInstance> read_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open dataset " + path);
  return read_dataset(is);
}

}  // namespace compcap
