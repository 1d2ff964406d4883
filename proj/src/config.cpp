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

#include "compcap/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "CLI11.hpp"
#include "compcap/error.hpp"

namespace compcap {
namespace {

using Values = std::vector<std::string>;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

const std::string& single(const std::string& key, const Values& v) {
  if (v.size() != 1) throw ConfigError(key + " expects one value, got " + std::to_string(v.size()));
  return v.front();
}

std::uint64_t parse_u64(const std::string& key, const std::string& s) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(key + ": not a non-negative integer: '" + s + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& s) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(key + ": not a number: '" + s + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const Values&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename Ref>
Field size_field(std::string key, Ref ref) {
  return {key,
          [key, ref](ExperimentConfig& c, const Values& v) { ref(c) = parse_u64(key, single(key, v)); },
          [ref](const ExperimentConfig& c) { return std::to_string(ref(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Ref>
Field double_field(std::string key, Ref ref) {
  return {key,
          [key, ref](ExperimentConfig& c, const Values& v) { ref(c) = parse_double(key, single(key, v)); },
          [ref](const ExperimentConfig& c) { return format_double(ref(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Ref>
Field bool_field(std::string key, Ref ref) {
  return {key,
          [key, ref](ExperimentConfig& c, const Values& v) { ref(c) = parse_bool(key, single(key, v)); },
          [ref](const ExperimentConfig& c) { return ref(const_cast<ExperimentConfig&>(c)) ? "true" : "false"; }};
}

#define CC_SIZE(key, expr) size_field(key, [](ExperimentConfig& c) -> std::size_t& { return expr; })
#define CC_DOUBLE(key, expr) double_field(key, [](ExperimentConfig& c) -> double& { return expr; })
#define CC_BOOL(key, expr) bool_field(key, [](ExperimentConfig& c) -> bool& { return expr; })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(CC_SIZE("data.scenes", c.scenes));
    f.push_back({"data.regions",
                 [](ExperimentConfig& c, const Values& v) {
                   c.gen.regions = parse_u64("data.regions", single("data.regions", v));
                   c.model.R = c.gen.regions;
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.gen.regions); }});
    f.push_back({"data.feature_dim",
                 [](ExperimentConfig& c, const Values& v) {
                   c.gen.feature_dim = parse_u64("data.feature_dim", single("data.feature_dim", v));
                   c.model.I = c.gen.feature_dim;
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.gen.feature_dim); }});
    f.push_back(CC_SIZE("data.captions", c.gen.captions));
    f.push_back(CC_DOUBLE("data.noise_sigma", c.gen.noise_sigma));
    f.push_back(CC_DOUBLE("data.p_color", c.gen.p_color));
    f.push_back(CC_DOUBLE("data.p_size", c.gen.p_size));
    f.push_back(CC_DOUBLE("data.p_verb", c.gen.p_verb));
    f.push_back(CC_DOUBLE("data.color_presence", c.gen.color_presence));
    f.push_back(CC_DOUBLE("data.size_presence", c.gen.size_presence));
    f.push_back(CC_DOUBLE("data.action_presence", c.gen.action_presence));
    f.push_back(CC_DOUBLE("data.patient_mention", c.gen.patient_mention));
    f.push_back(CC_DOUBLE("data.distractor_prob", c.gen.distractor_prob));
    f.push_back(CC_DOUBLE("data.there_is_prob", c.gen.there_is_prob));
    f.push_back(CC_DOUBLE("data.distractor_prominence", c.gen.distractor_prominence));
    f.push_back(CC_DOUBLE("data.salience_exponent", c.gen.salience_exponent));

    f.push_back(CC_SIZE("model.vocab", c.model.V));
    f.push_back(CC_SIZE("model.embedding", c.model.E));
    f.push_back(CC_SIZE("model.encoder", c.model.L));
    f.push_back(CC_SIZE("model.joint", c.model.J));
    f.push_back(CC_SIZE("model.attention", c.model.H));
    f.push_back(CC_SIZE("model.generator", c.model.G));
    f.push_back(CC_SIZE("model.max_len", c.model.max_len));

    f.push_back(CC_SIZE("train.batch_size", c.train.batch_size));
    f.push_back(CC_DOUBLE("train.lr", c.train.lr));
    f.push_back(CC_DOUBLE("train.clip_norm", c.train.clip_norm));
    f.push_back(CC_SIZE("train.max_epochs", c.train.max_epochs));
    f.push_back(CC_SIZE("train.patience", c.train.patience));
    f.push_back(CC_DOUBLE("train.margin", c.train.margin));
    f.push_back(CC_DOUBLE("train.gradnorm_lr", c.train.gradnorm_lr));
    f.push_back(CC_DOUBLE("train.gamma", c.train.gamma));
    f.push_back(CC_BOOL("train.gradnorm", c.train.gradnorm));
    f.push_back(CC_SIZE("train.rank_warmup_epochs", c.train.rank_warmup_epochs));
    f.push_back(CC_SIZE("train.captions_per_epoch", c.train.captions_per_epoch));
    f.push_back(CC_SIZE("train.val_scenes", c.train.val_scenes));

    f.push_back(CC_SIZE("decode.beam_size", c.decode.beam_size));
    f.push_back(CC_SIZE("decode.max_length", c.decode.max_length));
    f.push_back(CC_SIZE("decode.k", c.decode.k));

    f.push_back(CC_SIZE("splits.groups", c.groups));
    f.push_back(CC_DOUBLE("splits.val_fraction", c.val_fraction));

    f.push_back(CC_BOOL("eval.baseline", c.baseline));
    f.push_back(CC_SIZE("eval.recall_k", c.recall_k));
    f.push_back(CC_SIZE("eval.distractor_scenes", c.distractor_scenes));
    f.push_back(CC_SIZE("eval.distractors", c.distractors));
    f.push_back(CC_SIZE("eval.seg_len", c.seg_len));

    f.push_back({"experiment.seeds",
                 [](ExperimentConfig& c, const Values& v) {
                   c.seeds.clear();
                   for (const auto& s : v) c.seeds.push_back(parse_u64("experiment.seeds", s));
                 },
                 [](const ExperimentConfig& c) {
                   std::string out = "[";
                   for (std::size_t i = 0; i < c.seeds.size(); ++i) out += (i ? ", " : "") + std::to_string(c.seeds[i]);
                   return out + "]";
                 }});
    f.push_back({"experiment.out",
                 [](ExperimentConfig& c, const Values& v) { c.out_dir = single("experiment.out", v); },
                 [](const ExperimentConfig& c) { return "\"" + c.out_dir + "\""; }});
    return f;
  }();
  return table;
}

#undef CC_SIZE
#undef CC_DOUBLE
#undef CC_BOOL

const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (profile != "toy" && profile != "paper") throw ConfigError("unknown profile '" + profile + "'");
  if (scenes < 1) throw ConfigError("data.scenes must be >= 1");
  gen.validate();
  model.validate();
  train.validate();
  decode.validate();
  if (model.R != gen.regions || model.I != gen.feature_dim) {
    throw ConfigError("model R x I must match the generated region features");
  }
  if (groups < 1) throw ConfigError("splits.groups must be >= 1");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("splits.val_fraction must be in [0, 1)");
  if (recall_k < 1 || recall_k > decode.k) throw ConfigError("eval.recall_k must be in 1..decode.k");
  if (seg_len < 1) throw ConfigError("eval.seg_len must be >= 1");
  if (seeds.empty()) throw ConfigError("experiment.seeds must not be empty");
  if (out_dir.empty()) throw ConfigError("experiment.out must not be empty");
}

ExperimentConfig ExperimentConfig::defaults(const std::string& profile) {
  ExperimentConfig c;
  c.profile = profile;
  if (profile == "toy") {
    c.model = ModelConfig::toy();
    c.train.lr = 3e-3;
    c.train.rank_warmup_epochs = 2;
    c.train.patience = 10;
    c.decode.beam_size = 100;
  } else if (profile == "paper") {
    c.model = ModelConfig::paper();
    c.scenes = 120000;
    c.train.lr = 1e-4;
    c.decode.beam_size = 100;
  } else {
    throw ConfigError("unknown profile '" + profile + "' (expected toy or paper)");
  }
  c.gen.regions = c.model.R;
  c.gen.feature_dim = c.model.I;
  return c;
}

ExperimentConfig parse_config(std::istream& is, const std::optional<std::string>& profile) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(is);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  std::string chosen = "toy";
  for (const auto& it : items) {
    if (it.parents.empty() && it.name == "profile") chosen = single("profile", it.inputs);
  }
  if (profile) chosen = *profile;
  ExperimentConfig c = ExperimentConfig::defaults(chosen);
  for (const auto& it : items) {
    if (it.name == "++" || it.name == "--") continue;
    const std::string key = it.fullname();
    if (key == "profile") continue;
    const Field* f = find_field(key);
    if (!f) throw ConfigError("unknown config key '" + key + "'");
    f->set(c, it.inputs);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::optional<std::string>& profile) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, profile);
}

std::string config_to_string(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "profile = " << c.profile << "\n";
  std::string section;
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      os << "\n[" << sec << "]\n";
      section = sec;
    }
    os << f.key.substr(dot + 1) << " = " << f.get(c) << "\n";
  }
  return os.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out{"profile"};
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

}  // namespace compcap
