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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "compcap/checkpoint.hpp"
#include "compcap/config.hpp"
#include "compcap/experiment.hpp"
#include "compcap/io.hpp"

using namespace compcap;

namespace {

struct Options {
  std::string config;
  std::optional<std::string> profile;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string mode = "beam";
  std::string model = "joint";
  std::optional<std::size_t> group;
  bool full = false;
};

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig::defaults(o.profile.value_or("toy"))
                                        : load_config(o.config, o.profile);
  if (o.seed) c.seeds = {*o.seed};
  if (o.out) c.out_dir = *o.out;
  c.validate();
  return c;
}

std::uint64_t seed_of(const ExperimentConfig& c) { return c.seeds.front(); }

std::vector<SceneInstance> load_dataset(const ExperimentConfig& c) { return read_dataset(c.out_dir + "/dataset.jsonl"); }

DatasetSplits load_splits(const ExperimentConfig& c, const Lexicon& lex, SplitSpec* spec) {
  return splits_from_json(read_file(c.out_dir + "/splits.json"), lex, spec);
}

bool is_joint(const Options& o) {
  if (o.model != "joint" && o.model != "baseline") throw ConfigError("--model must be joint or baseline");
  return o.model == "joint";
}

int cmd_generate(const Options& o) {
  const ExperimentConfig c = resolve(o);
  const Lexicon lex = build_lexicon();
  const auto data = generate_stage(c, seed_of(c), lex);
  std::filesystem::create_directories(c.out_dir);
  write_dataset(c.out_dir + "/dataset.jsonl", data);
  std::cout << "wrote " << data.size() << " scenes to " << c.out_dir << "/dataset.jsonl\n";
  return 0;
}

int cmd_split(const Options& o) {
  const ExperimentConfig c = resolve(o);
  if (o.full && o.group) throw ConfigError("--full and --group are mutually exclusive");
  const Lexicon lex = build_lexicon();
  const auto data = load_dataset(c);
  const std::optional<std::size_t> group = o.full ? std::nullopt : std::optional<std::size_t>(o.group.value_or(0));
  const SplitStage s = split_stage(c, seed_of(c), data, lex, group);
  write_file(c.out_dir + "/splits.json", splits_to_json(s.splits, s.spec));
  std::cout << s.validation.table();
  std::cout << "train " << s.splits.train.size() << ", val " << s.splits.val.size() << ", eval "
            << s.splits.eval_ids().size() << ", removed fraction " << s.splits.removed_fraction << "\n";
  for (const auto& w : s.validation.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  const ExperimentConfig c = resolve(o);
  const bool joint = is_joint(o);
  const Lexicon lex = build_lexicon();
  const auto data = load_dataset(c);
  const DatasetSplits splits = load_splits(c, lex, nullptr);
  const Vocabulary vocab = vocab_stage(c, data, splits);
  std::ostringstream log;
  const TrainResult r = train_stage(c, seed_of(c), o.model, joint, data, splits, vocab, lex, &std::cout, &log);
  write_file(c.out_dir + "/" + o.model + "_log.jsonl", log.str());
  save_checkpoint(c.out_dir + "/" + o.model + ".ckpt", r.best, vocab);
  std::cout << "best epoch " << r.best_epoch << ", val BLEU " << r.best_val_bleu
            << (r.diverged ? ", diverged: " + r.divergence : std::string()) << "\n";
  return 0;
}

int cmd_decode(const Options& o) {
  const ExperimentConfig c = resolve(o);
  const DecodeMode mode = parse_mode(o.mode);
  const Lexicon lex = build_lexicon();
  const auto data = load_dataset(c);
  const DatasetSplits splits = load_splits(c, lex, nullptr);
  Checkpoint ck = load_checkpoint(c.out_dir + "/" + o.model + ".ckpt");
  const bool rerank = mode == DecodeMode::kRerank;
  if (rerank && !ck.params.config.ranking_enabled) throw ConfigError("rerank needs a jointly trained model");
  DecodeStage d = decode_stage(c, ck.params, ck.vocab, data, splits.eval_ids(), rerank);
  const std::string path = c.out_dir + "/captions_" + o.model + "_" + o.mode + ".jsonl";
  std::ostringstream os;
  write_captions(os, rerank ? d.rerank : d.beam, rerank);
  write_file(path, os.str());
  std::cout << "wrote captions for " << d.beam.size() << " scenes to " << path << "\n";
  return 0;
}

int cmd_evaluate(const Options& o) {
  const ExperimentConfig c = resolve(o);
  const Lexicon lex = build_lexicon();
  const auto data = load_dataset(c);
  SplitSpec spec;
  const DatasetSplits splits = load_splits(c, lex, &spec);
  const std::string stem = o.model + "_" + o.mode;
  std::ifstream in(c.out_dir + "/captions_" + stem + ".jsonl");
  if (!in) throw IoError("missing " + c.out_dir + "/captions_" + stem + ".jsonl (run decode first)");
  const auto decoded = read_captions(in);

  CaptionSets generated, references;
  std::map<std::int64_t, std::string> top;
  for (const auto& d : decoded) {
    generated[d.scene_id] = d.captions;
    if (!d.captions.empty()) top[d.scene_id] = d.captions.front();
  }
  std::vector<std::string> train_caps;
  std::set<std::int64_t> train_ids(splits.train.begin(), splits.train.end());
  for (const auto& s : data) {
    references[s.id] = s.captions;
    if (train_ids.count(s.id)) train_caps.insert(train_caps.end(), s.captions.begin(), s.captions.end());
  }
  std::map<std::string, std::string> category_of;
  std::vector<PairRecallResult> per_pair;
  for (const auto& p : default_pairs(lex)) {
    category_of[p.name()] = std::string(category_name(p.category));
    std::vector<std::int64_t> ids;
    if (auto it = splits.eval.find(p.name()); it != splits.eval.end()) {
      ids = it->second;
    } else if (auto all = splits.eval.find("*"); all != splits.eval.end()) {
      ids = all->second;
    } else {
      continue;
    }
    try {
      per_pair.push_back(recall_at_k(generated, references, ids, p, lex, c.recall_k));
    } catch (const MetricError&) {
    }
  }
  const EvalReport rep = aggregate_report(per_pair, category_of, bleu(top, references),
                                          diversity_metrics(top, train_caps, references, c.seg_len));
  write_file(c.out_dir + "/eval_" + stem + ".json", report_json(rep) + "\n");
  std::cout << report_text(rep);
  return 0;
}

int cmd_run_all(const Options& o) {
  const ExperimentConfig c = resolve(o);
  const RunManifest m = run_experiment(c, &std::cout);
  std::cout << read_file(c.out_dir + "/summary.txt") << "manifest: " << m.files.size() << " files, config "
            << m.config_hash << "\n";
  return 0;
}

int cmd_report(const Options& o) {
  const ExperimentConfig c = resolve(o);
  emit_reports(c.out_dir);
  std::cout << read_file(c.out_dir + "/summary.txt");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compositional captioning experiments on synthetic scenes"};
  app.require_subcommand(1);
  Options o;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "config file")->check(CLI::ExistingFile);
    sub->add_option("--profile", o.profile, "default profile")->check(CLI::IsMember({"toy", "paper"}));
    sub->add_option("--seed", o.seed, "seed (replaces the configured seed list)");
    sub->add_option("--out", o.out, "output directory");
  };
  using Handler = int (*)(const Options&);
  const std::vector<std::tuple<const char*, const char*, Handler>> commands = {
      {"generate", "generate the synthetic dataset", cmd_generate},
      {"split", "build and validate one split", cmd_split},
      {"train", "train a model on the split", cmd_train},
      {"decode", "decode the eval scenes", cmd_decode},
      {"evaluate", "score decoded captions", cmd_evaluate},
      {"run-all", "run every seed, group and the FULL setting", cmd_run_all},
      {"report", "render tables from a finished run", cmd_report},
  };
  std::map<CLI::App*, Handler> handlers;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub);
    handlers[sub] = fn;
    const std::string n = name;
    if (n == "split") {
      sub->add_option("--group", o.group, "held-out group index");
      sub->add_flag("--full", o.full, "FULL setting (no held-out pairs)");
    }
    if (n == "train" || n == "decode" || n == "evaluate") {
      sub->add_option("--model", o.model, "joint or baseline")->check(CLI::IsMember({"joint", "baseline"}));
    }
    if (n == "decode" || n == "evaluate") {
      sub->add_option("--mode", o.mode, "beam or rerank")->check(CLI::IsMember({"beam", "rerank"}));
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  for (const auto& [sub, fn] : handlers) {
    if (!sub->parsed()) continue;
    try {
      return fn(o);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    } catch (const StageError& e) {
      std::cerr << "stage " << e.stage() << " failed: " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << sub->get_name() << " failed: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
