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

#include "compcap/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "compcap/checkpoint.hpp"
#include "compcap/io.hpp"

namespace compcap {
namespace fs = std::filesystem;

StageError::StageError(std::string stage, const std::string& message)
    : Error(stage + ": " + message), stage_(std::move(stage)) {}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : tag) h = (h ^ ch) * 1099511628211ULL;
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (h | 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

const char* const kRows[] = {"baseline", "joint", "joint+rerank", "FULL", "FULL joint", "FULL joint+rerank"};

double round4(double v) { return std::round(v * 1e4) / 1e4; }

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

class Progress {
 public:
  explicit Progress(std::ostream* os) : os_(os) {}
  template <typename... Args>
  void operator()(const Args&... args) const {
    if (!os_) return;
    ((*os_) << ... << args) << std::endl;
  }

 private:
  std::ostream* os_;
};

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::map<std::int64_t, const SceneInstance*> index_scenes(const std::vector<SceneInstance>& dataset) {
  std::map<std::int64_t, const SceneInstance*> out;
  for (const auto& s : dataset) out[s.id] = &s;
  return out;
}

CaptionSets as_sets(const std::vector<DecodedCaptions>& decoded) {
  CaptionSets out;
  for (const auto& d : decoded) out[d.scene_id] = d.captions;
  return out;
}

std::map<std::int64_t, std::string> top1(const std::vector<DecodedCaptions>& decoded,
                                         const std::vector<std::int64_t>& ids) {
  std::map<std::int64_t, std::string> out;
  std::set<std::int64_t> keep(ids.begin(), ids.end());
  for (const auto& d : decoded) {
    if (keep.count(d.scene_id) && !d.captions.empty()) out[d.scene_id] = d.captions.front();
  }
  return out;
}

std::vector<std::string> captions_of(const std::vector<SceneInstance>& dataset, const std::vector<std::int64_t>& ids) {
  const auto index = index_scenes(dataset);
  std::vector<std::string> out;
  for (auto id : ids) {
    const auto* s = index.at(id);
    out.insert(out.end(), s->captions.begin(), s->captions.end());
  }
  return out;
}

void write_decoded(const std::string& path, const std::vector<DecodedCaptions>& d, bool with_similarities) {
  std::ostringstream os;
  write_captions(os, d, with_similarities);
  write_file(path, os.str());
}

Json diversity_to_json(const DiversityReport& d) {
  return Json{{"asl", round4(d.asl)},           {"sdsl", round4(d.sdsl)},   {"types", d.types},
              {"ttr1", round4(d.ttr1)},         {"ttr2", round4(d.ttr2)},   {"pct_novel", round4(d.pct_novel)},
              {"coverage", round4(d.coverage)}, {"loc5", round4(d.loc5)},   {"seg_len", d.seg_len}};
}

Json train_summary(const std::string& setting, const std::string& model, const TrainResult& r) {
  return Json{{"setting", setting},
              {"model", model},
              {"epochs", r.log.size()},
              {"best_epoch", r.best_epoch},
              {"best_val_bleu", round4(r.best_val_bleu)},
              {"final_loss_gen", r.log.empty() ? 0.0 : round4(r.log.back().loss_gen)},
              {"diverged", r.diverged}};
}

struct TrainedModel {
  ModelParams params;
  Json summary;
};

TrainedModel train_and_save(const ExperimentConfig& c, std::uint64_t seed, const std::string& setting,
                            const std::string& model, bool ranking, const std::vector<SceneInstance>& dataset,
                            const DatasetSplits& splits, const Vocabulary& vocab, const Lexicon& lex,
                            const std::string& dir, std::ostream* progress) {
  std::ostringstream log;
  TrainResult r = stage("train", [&] {
    return train_stage(c, seed, setting + "/" + model, ranking, dataset, splits, vocab, lex, progress, &log);
  });
  write_file(dir + "/" + model + "_log.jsonl", log.str());
  save_checkpoint(dir + "/" + model + ".ckpt", r.best, vocab);
  return {std::move(r.best), train_summary(setting, model, r)};
}

// Everything evaluated in one setting (a held-out group or FULL).
struct SettingOutputs {
  std::vector<DecodedCaptions> baseline;
  std::vector<DecodedCaptions> beam;
  std::vector<DecodedCaptions> rerank;
  ModelParams joint;
  Vocabulary vocab;
  std::vector<std::string> train_captions;
};

SettingOutputs run_setting(const ExperimentConfig& c, std::uint64_t seed, const std::string& name,
                           const std::vector<SceneInstance>& dataset, const SplitStage& split, const Lexicon& lex,
                           const std::vector<std::int64_t>& decode_ids, const std::string& dir, Json& training,
                           std::ostream* progress) {
  SettingOutputs out;
  out.vocab = vocab_stage(c, dataset, split.splits);
  write_file(dir + "/vocab.txt", [&] {
    std::string s;
    for (const auto& w : out.vocab.words()) s += w + "\n";
    return s;
  }());
  out.train_captions = captions_of(dataset, split.splits.train);
  if (c.baseline) {
    TrainedModel base = train_and_save(c, seed, name, "baseline", false, dataset, split.splits, out.vocab, lex, dir, progress);
    training.push_back(base.summary);
    DecodeStage d = stage("decode", [&] { return decode_stage(c, base.params, out.vocab, dataset, decode_ids, false); });
    out.baseline = std::move(d.beam);
    write_decoded(dir + "/captions_baseline_beam.jsonl", out.baseline, false);
  }
  TrainedModel joint = train_and_save(c, seed, name, "joint", true, dataset, split.splits, out.vocab, lex, dir, progress);
  training.push_back(joint.summary);
  DecodeStage d = stage("decode", [&] { return decode_stage(c, joint.params, out.vocab, dataset, decode_ids, true); });
  out.beam = std::move(d.beam);
  out.rerank = std::move(d.rerank);
  write_decoded(dir + "/captions_joint_beam.jsonl", out.beam, false);
  write_decoded(dir + "/captions_joint_rerank.jsonl", out.rerank, true);
  out.joint = std::move(joint.params);
  return out;
}

Json split_summary(const std::string& setting, const SplitStage& s) {
  Json pairs = Json::array();
  for (const auto& p : s.spec.held_out_pairs) pairs.push_back(p.name());
  return Json{{"setting", setting},
              {"held_out_pairs", pairs},
              {"train", s.splits.train.size()},
              {"val", s.splits.val.size()},
              {"eval", s.splits.eval_ids().size()},
              {"removed_fraction", round4(s.splits.removed_fraction)},
              {"validation_ok", s.validation.ok()}};
}

}  // namespace

std::vector<SceneInstance> generate_stage(const ExperimentConfig& c, std::uint64_t seed, const Lexicon& lex) {
  GenConfig g = c.gen;
  g.seed = seed;
  return generate_dataset(c.scenes, g, lex);
}

SplitStage split_stage(const ExperimentConfig& c, std::uint64_t seed, const std::vector<SceneInstance>& dataset,
                       const Lexicon& lex, std::optional<std::size_t> group,
                       const std::vector<std::int64_t>& reserved_eval) {
  SplitStage s;
  SplitOptions options;
  options.val_fraction = c.val_fraction;
  if (group) {
    const auto groups = group_pairs(default_pairs(lex), c.groups);
    if (*group >= groups.size()) {
      throw ConfigError("group " + std::to_string(*group) + " out of range (" + std::to_string(groups.size()) +
                        " groups)");
    }
    s.spec = groups[*group];
  } else {
    options.reserved_eval = reserved_eval;
    options.tracked_pairs = default_pairs(lex);
  }
  Rng rng(derive_seed(seed, group ? "split:" + std::to_string(*group) : std::string("split:full")));
  s.splits = build_splits(dataset, s.spec, lex, rng, options);
  s.validation = validate_splits(s.splits, s.spec, dataset, lex);
  if (!s.validation.ok()) {
    std::string msg = "split validation failed:";
    for (const auto& f : s.validation.failures) msg += "\n  " + f;
    throw StageError("split", msg);
  }
  return s;
}

Vocabulary vocab_stage(const ExperimentConfig& c, const std::vector<SceneInstance>& dataset,
                       const DatasetSplits& splits) {
  return Vocabulary::build(captions_of(dataset, splits.train), c.model.V);
}

TrainResult train_stage(const ExperimentConfig& c, std::uint64_t seed, const std::string& setting, bool ranking,
                        const std::vector<SceneInstance>& dataset, const DatasetSplits& splits,
                        const Vocabulary& vocab, const Lexicon& lex, std::ostream* progress, std::ostream* log) {
  ModelConfig mc = c.model;
  mc.V = vocab.size();
  mc.ranking_enabled = ranking;
  Rng init_rng(derive_seed(seed, "init:" + setting));
  TrainConfig tc = c.train;
  tc.seed = derive_seed(seed, "train:" + setting);
  TrainHooks hooks;
  hooks.progress = progress;
  hooks.log = log;
  if (progress) *progress << "[" << setting << "] training " << (ranking ? "joint" : "generation-only") << " model\n";
  return train(init_params(mc, init_rng), dataset, splits, vocab, lex, tc, hooks);
}

DecodeStage decode_stage(const ExperimentConfig& c, ModelParams& p, const Vocabulary& vocab,
                         const std::vector<SceneInstance>& dataset, const std::vector<std::int64_t>& ids,
                         bool rerank) {
  const auto index = index_scenes(dataset);
  DecodeStage out;
  for (auto id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw IoError("scene " + std::to_string(id) + " is not in the dataset");
    if (rerank) {
      BothModes both = decode_both(id, it->second->regions, p, c.decode, vocab);
      out.beam.push_back(std::move(both.beam));
      out.rerank.push_back(std::move(both.rerank));
    } else {
      out.beam.push_back(decode_topk(id, it->second->regions, p, c.decode, vocab));
    }
  }
  return out;
}

Json run_seed(const ExperimentConfig& c, std::uint64_t seed, const std::string& dir, std::ostream* progress) {
  const Progress say(progress);
  const Lexicon lex = build_lexicon();
  const auto pairs = default_pairs(lex);
  const auto groups = group_pairs(pairs, c.groups);
  std::map<std::string, std::string> category_of;
  for (const auto& p : pairs) category_of[p.name()] = std::string(category_name(p.category));

  say("seed ", seed, ": generating ", c.scenes, " scenes");
  const auto dataset = stage("generate", [&] { return generate_stage(c, seed, lex); });
  {
    std::ostringstream os;
    write_dataset(os, dataset);
    write_file(dir + "/dataset.jsonl", os.str());
  }
  const auto index = index_scenes(dataset);
  CaptionSets references;
  for (const auto& s : dataset) references[s.id] = s.captions;

  Json splits_json = Json::array();
  Json training = Json::array();

  // Held-out groups.
  std::vector<SplitStage> group_splits;
  std::vector<SettingOutputs> group_out;
  std::set<std::int64_t> eval_union;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const std::string name = "group-" + std::to_string(g);
    const std::string gdir = dir + "/" + name;
    say("seed ", seed, ": ", name, " split");
    SplitStage split = stage("split", [&] { return split_stage(c, seed, dataset, lex, g); });
    write_file(gdir + "/splits.json", splits_to_json(split.splits, split.spec));
    write_file(gdir + "/validation.txt", split.validation.table());
    splits_json.push_back(split_summary(name, split));
    const auto ids = split.splits.eval_ids();
    eval_union.insert(ids.begin(), ids.end());
    group_out.push_back(run_setting(c, seed, name, dataset, split, lex, ids, gdir, training, progress));
    group_splits.push_back(std::move(split));
  }

  // FULL setting: same eval scenes kept out, nothing else held out.
  say("seed ", seed, ": FULL split");
  const std::vector<std::int64_t> reserved(eval_union.begin(), eval_union.end());
  SplitStage full_split = stage("split", [&] { return split_stage(c, seed, dataset, lex, std::nullopt, reserved); });
  write_file(dir + "/full/splits.json", splits_to_json(full_split.splits, full_split.spec));
  write_file(dir + "/full/validation.txt", full_split.validation.table());
  splits_json.push_back(split_summary("full", full_split));
  SettingOutputs full = run_setting(c, seed, "full", dataset, full_split, lex, reserved, dir + "/full", training, progress);

  say("seed ", seed, ": evaluating");
  return stage("evaluate", [&] {
    std::map<std::string, std::vector<PairRecallResult>> per_row;
    std::map<std::string, std::vector<double>> bleu_parts;
    Json per_pair = Json::array();
    Json ranking_pairs = Json::array();
    double rank_held = 0.0, rank_full = 0.0;

    // Distractor pool: captions of scenes outside every eval set.
    std::vector<std::int64_t> pool_ids;
    for (const auto& s : dataset) {
      if (!eval_union.count(s.id)) pool_ids.push_back(s.id);
    }
    Rng pool_rng(derive_seed(seed, "distractor-pool"));
    std::shuffle(pool_ids.begin(), pool_ids.end(), pool_rng);
    pool_ids.resize(std::min(pool_ids.size(), c.distractor_scenes));
    std::sort(pool_ids.begin(), pool_ids.end());
    const auto pool = captions_of(dataset, pool_ids);

    const CaptionSets full_base = as_sets(full.baseline), full_beam = as_sets(full.beam),
                      full_rerank = as_sets(full.rerank);
    CaptionScorer full_scorer = model_scorer(full.joint, full.vocab);

    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto& split = group_splits[g];
      auto& out = group_out[g];
      const CaptionSets base = as_sets(out.baseline), beam = as_sets(out.beam), rerank = as_sets(out.rerank);
      const auto ids = split.splits.eval_ids();
      if (c.baseline) bleu_parts["baseline"].push_back(bleu(top1(out.baseline, ids), references));
      bleu_parts["joint"].push_back(bleu(top1(out.beam, ids), references));
      bleu_parts["joint+rerank"].push_back(bleu(top1(out.rerank, ids), references));
      CaptionScorer scorer = model_scorer(out.joint, out.vocab);

      for (const auto& pair : split.spec.held_out_pairs) {
        const auto& eval_ids = split.splits.eval.at(pair.name());
        Json row{{"pair", pair.name()}, {"category", category_of.at(pair.name())}, {"group", g}, {"m", eval_ids.size()}};
        const auto record = [&](const std::string& name, const CaptionSets& gen) {
          auto r = recall_at_k(gen, references, eval_ids, pair, lex, c.recall_k);
          r.recall = round4(r.recall);
          row[name] = r.recall;
          per_row[name].push_back(std::move(r));
        };
        if (c.baseline) record("baseline", base);
        record("joint", beam);
        record("joint+rerank", rerank);
        if (c.baseline) record("FULL", full_base);
        record("FULL joint", full_beam);
        record("FULL joint+rerank", full_rerank);
        per_pair.push_back(row);

        std::vector<const SceneInstance*> scenes;
        for (auto id : eval_ids) scenes.push_back(index.at(id));
        const std::uint64_t rs = derive_seed(seed, "ranking:" + pair.name());
        Rng r1(rs), r2(rs);
        const double held = ranking_recall(scorer, scenes, pair, lex, pool, c.recall_k, c.distractors, r1);
        const double fv = ranking_recall(full_scorer, scenes, pair, lex, pool, c.recall_k, c.distractors, r2);
        rank_held += held;
        rank_full += fv;
        ranking_pairs.push_back(Json{{"pair", pair.name()}, {"held_out", round4(held)}, {"full", round4(fv)}});
      }
    }
    const double n_pairs = static_cast<double>(ranking_pairs.size());
    rank_held = round4(rank_held / n_pairs);
    rank_full = round4(rank_full / n_pairs);

    if (c.baseline) bleu_parts["FULL"].push_back(bleu(top1(full.baseline, reserved), references));
    bleu_parts["FULL joint"].push_back(bleu(top1(full.beam, reserved), references));
    bleu_parts["FULL joint+rerank"].push_back(bleu(top1(full.rerank, reserved), references));

    // Diversity over the top-1 caption of every eval scene; held-out rows
    // take each scene from the first group that evaluates it.
    std::map<std::string, std::map<std::int64_t, std::string>> top;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto ids = group_splits[g].splits.eval_ids();
      const auto merge = [&](const std::string& row, const std::vector<DecodedCaptions>& d) {
        for (auto& [id, cap] : top1(d, ids)) top[row].emplace(id, cap);
      };
      if (c.baseline) merge("baseline", group_out[g].baseline);
      merge("joint", group_out[g].beam);
      merge("joint+rerank", group_out[g].rerank);
    }
    if (c.baseline) top["FULL"] = top1(full.baseline, reserved);
    top["FULL joint"] = top1(full.beam, reserved);
    top["FULL joint+rerank"] = top1(full.rerank, reserved);

    Json headline = Json::array();
    Json categories = Json::array();
    Json diversity = Json::array();
    std::map<std::string, double> mean_of;
    for (const char* row : kRows) {
      if (!per_row.count(row)) continue;
      double b = 0.0;
      for (double v : bleu_parts.at(row)) b += v;
      b = round4(b / static_cast<double>(bleu_parts.at(row).size()));
      const DiversityReport div = diversity_metrics(top.at(row), full.train_captions, references, c.seg_len);
      const EvalReport rep = aggregate_report(per_row.at(row), category_of, b, div);
      mean_of[row] = round4(rep.mean_recall);
      headline.push_back(Json{{"model", row}, {"recall", mean_of[row]}, {"bleu", b}});
      Json cats = Json::object();
      for (const auto& cm : rep.categories) cats[cm.category] = round4(cm.mean);
      categories.push_back(Json{{"model", row}, {"categories", cats}});
      Json d{{"model", row}};
      d.update(diversity_to_json(div));
      diversity.push_back(d);
    }

    // Agreement stratification on the FULL generation-only model (the joint
    // model when no baseline is trained), pooled over pairs.
    const std::string strat_row = c.baseline ? "FULL" : "FULL joint";
    const CaptionSets& strat_sets = c.baseline ? full_base : full_beam;
    Json strat = Json::array();
    std::vector<double> strat_recalls;
    for (std::size_t m = 1; m <= c.gen.captions; ++m) {
      std::size_t hits = 0, scenes = 0;
      for (const auto& split : group_splits) {
        for (const auto& pair : split.spec.held_out_pairs) {
          try {
            const auto r = recall_at_k(strat_sets, references, split.splits.eval.at(pair.name()), pair, lex,
                                       c.recall_k, m);
            hits += r.hits;
            scenes += r.m;
          } catch (const MetricError&) {
          }
        }
      }
      Json point{{"min_refs", m}, {"scenes", scenes}, {"hits", hits}};
      if (scenes > 0) {
        const double r = round4(static_cast<double>(hits) / static_cast<double>(scenes));
        point["recall"] = r;
        strat_recalls.push_back(r);
      } else {
        point["recall"] = nullptr;
      }
      strat.push_back(point);
    }
    bool monotone = true;
    for (std::size_t i = 1; i < strat_recalls.size(); ++i) monotone = monotone && strat_recalls[i] >= strat_recalls[i - 1];

    Json checks = Json::object();
    if (c.baseline) checks["full_above_heldout"] = mean_of["FULL"] > mean_of["baseline"];
    checks["rerank_above_beam"] = mean_of["joint+rerank"] > mean_of["joint"];
    checks["ranking_within_20pct"] = rank_full > 0.0 && std::abs(rank_held - rank_full) <= 0.2 * rank_full;
    checks["stratification_monotone"] = monotone;

    Json report;
    report["seed"] = seed;
    report["profile"] = c.profile;
    report["config_hash"] = config_hash(c);
    report["recall_k"] = c.recall_k;
    report["headline"] = headline;
    report["categories"] = categories;
    report["per_pair"] = per_pair;
    report["diversity"] = diversity;
    report["stratification"] = Json{{"model", strat_row}, {"points", strat}};
    report["ranking_recall"] = Json{{"held_out", rank_held}, {"full", rank_full}, {"per_pair", ranking_pairs}};
    report["splits"] = splits_json;
    report["training"] = training;
    report["checks"] = checks;
    write_file(dir + "/report.json", report.dump(2) + "\n");
    return report;
  });
}

std::string config_hash(const ExperimentConfig& c) { return sha1_hex(config_to_string(c)); }

RunManifest build_manifest(const std::string& dir, const std::string& hash, std::string started, std::string finished) {
  RunManifest m;
  m.config_hash = hash;
  m.started = std::move(started);
  m.finished = std::move(finished);
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    m.files.push_back({rel, sha1_file(e.path().string()), e.file_size()});
  }
  std::sort(m.files.begin(), m.files.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return m;
}

Json manifest_json(const RunManifest& m) {
  Json files = Json::array();
  for (const auto& f : m.files) files.push_back(Json{{"path", f.path}, {"sha1", f.sha1}, {"bytes", f.bytes}});
  return Json{{"config_hash", m.config_hash}, {"started", m.started}, {"finished", m.finished}, {"files", files}};
}

RunManifest run_experiment(const ExperimentConfig& c, std::ostream* progress) {
  c.validate();
  const std::string started = utc_timestamp();
  fs::create_directories(c.out_dir);
  write_file(c.out_dir + "/config.toml", config_to_string(c));
  for (auto seed : c.seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    run_seed(c, seed, c.out_dir + "/seed-" + std::to_string(seed), progress);
    if (progress) {
      *progress << "seed " << seed << " finished in "
                << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s" << std::endl;
    }
  }
  stage("report", [&] {
    emit_reports(c.out_dir);
    return 0;
  });
  RunManifest m = build_manifest(c.out_dir, config_hash(c), started, utc_timestamp());
  write_file(c.out_dir + "/manifest.json", manifest_json(m).dump(2) + "\n");
  return m;
}

namespace {

struct Stat {
  double mean = 0.0;
  double std = 0.0;
};

Stat stat_of(const std::vector<double>& v) {
  Stat s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

Json stat_json(const std::vector<double>& v) {
  const Stat s = stat_of(v);
  return Json{{"mean", round4(s.mean)}, {"std", round4(s.std)}, {"values", v}};
}

std::string pad(const std::string& s, std::size_t w, bool left = true) {
  if (s.size() >= w) return s;
  return left ? s + std::string(w - s.size(), ' ') : std::string(w - s.size(), ' ') + s;
}

std::string cell(const Json& v) {
  if (v.is_null()) return "-";
  if (v.is_number_float()) return fixed4(v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// Aligned table; the first column is left-aligned, the others right-aligned.
std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) w[i] = header[i].size();
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
  }
  std::ostringstream os;
  const auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      os << (i ? "  " : "") << pad(i < r.size() ? r[i] : "", w[i], i == 0);
    }
    os << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto x : w) total += x;
  os << std::string(total + 2 * (w.size() - 1), '-') << '\n';
  for (const auto& r : rows) line(r);
  return os.str();
}

std::vector<std::string> row_names(const Json& report) {
  std::vector<std::string> out;
  for (const auto& h : report.at("headline")) out.push_back(h.at("model"));
  return out;
}

}  // namespace

std::string render_report_text(const Json& report) {
  std::ostringstream os;
  const auto rows = row_names(report);
  const std::string k = std::to_string(report.at("recall_k").get<std::size_t>());
  os << "seed " << report.at("seed").get<std::uint64_t>() << ", profile " << report.at("profile").get<std::string>()
     << ", config " << report.at("config_hash").get<std::string>() << "\n\n";

  os << "Headline (Recall@" << k << ", BLEU)\n";
  std::vector<std::vector<std::string>> t;
  for (const auto& h : report.at("headline")) t.push_back({h.at("model"), cell(h.at("recall")), cell(h.at("bleu"))});
  os << table({"model", "R", "BLEU"}, t) << '\n';

  os << "Category means (Recall@" << k << ")\n";
  std::vector<std::string> cat_names;
  for (const auto& c : report.at("categories")) {
    for (const auto& [name, v] : c.at("categories").items()) {
      if (std::find(cat_names.begin(), cat_names.end(), name) == cat_names.end()) cat_names.push_back(name);
    }
  }
  std::vector<std::string> header{"model"};
  header.insert(header.end(), cat_names.begin(), cat_names.end());
  t.clear();
  for (const auto& c : report.at("categories")) {
    std::vector<std::string> r{c.at("model")};
    for (const auto& name : cat_names) r.push_back(c.at("categories").contains(name) ? cell(c.at("categories").at(name)) : "-");
    t.push_back(r);
  }
  os << table(header, t) << '\n';

  os << "Per-pair Recall@" << k << "\n";
  header = {"pair", "category", "group", "m"};
  header.insert(header.end(), rows.begin(), rows.end());
  t.clear();
  for (const auto& p : report.at("per_pair")) {
    std::vector<std::string> r{p.at("pair"), p.at("category"), cell(p.at("group")), cell(p.at("m"))};
    for (const auto& row : rows) r.push_back(cell(p.at(row)));
    t.push_back(r);
  }
  os << table(header, t) << '\n';

  os << "Diversity (top-1 captions)\n";
  t.clear();
  for (const auto& d : report.at("diversity")) {
    t.push_back({d.at("model"), cell(d.at("asl")), cell(d.at("sdsl")), cell(d.at("types")), cell(d.at("ttr1")),
                 cell(d.at("ttr2")), cell(d.at("pct_novel")), cell(d.at("coverage")), cell(d.at("loc5"))});
  }
  os << table({"model", "ASL", "SDSL", "Types", "TTR1", "TTR2", "%Novel", "Cov", "Loc5"}, t);
  os << "TTR segment length " << report.at("diversity").at(0).at("seg_len").get<std::size_t>()
     << " tokens; Loc5 = recall of words shared by all references\n\n";

  const auto& st = report.at("stratification");
  os << "Agreement stratification (" << st.at("model").get<std::string>() << ", pooled over pairs)\n";
  t.clear();
  for (const auto& p : st.at("points")) t.push_back({cell(p.at("min_refs")), cell(p.at("scenes")), cell(p.at("hits")), cell(p.at("recall"))});
  os << table({"min_refs", "scenes", "hits", "R"}, t) << '\n';

  const auto& rr = report.at("ranking_recall");
  os << "Ranking recall (top-" << k << " of references + distractors)\n";
  t.clear();
  for (const auto& p : rr.at("per_pair")) t.push_back({p.at("pair"), cell(p.at("held_out")), cell(p.at("full"))});
  t.push_back({"mean", cell(rr.at("held_out")), cell(rr.at("full"))});
  os << table({"pair", "held-out", "FULL"}, t) << '\n';

  os << "Splits\n";
  t.clear();
  for (const auto& s : report.at("splits")) {
    t.push_back({s.at("setting"), cell(s.at("train")), cell(s.at("val")), cell(s.at("eval")), cell(s.at("removed_fraction")),
                 cell(s.at("validation_ok"))});
  }
  os << table({"setting", "train", "val", "eval", "removed", "valid"}, t) << '\n';

  os << "Training\n";
  t.clear();
  for (const auto& s : report.at("training")) {
    t.push_back({s.at("setting").get<std::string>() + "/" + s.at("model").get<std::string>(), cell(s.at("epochs")),
                 cell(s.at("best_epoch")), cell(s.at("best_val_bleu")), cell(s.at("final_loss_gen")), cell(s.at("diverged"))});
  }
  os << table({"run", "epochs", "best", "val BLEU", "loss_gen", "diverged"}, t) << '\n';

  os << "Directional checks\n";
  t.clear();
  for (const auto& [name, v] : report.at("checks").items()) t.push_back({name, cell(v)});
  os << table({"check", "holds"}, t);
  return os.str();
}

Json summarize(const std::vector<Json>& reports) {
  if (reports.empty()) throw IoError("no seed reports to summarize");
  Json s;
  Json seeds = Json::array();
  for (const auto& r : reports) seeds.push_back(r.at("seed"));
  s["seeds"] = seeds;
  s["profile"] = reports.front().at("profile");
  s["config_hash"] = reports.front().at("config_hash");
  s["recall_k"] = reports.front().at("recall_k");

  Json headline = Json::array();
  for (const auto& row : row_names(reports.front())) {
    std::vector<double> rv, bv;
    for (const auto& r : reports) {
      for (const auto& h : r.at("headline")) {
        if (h.at("model") == row) {
          rv.push_back(h.at("recall"));
          bv.push_back(h.at("bleu"));
        }
      }
    }
    headline.push_back(Json{{"model", row}, {"recall", stat_json(rv)}, {"bleu", stat_json(bv)}});
  }
  s["headline"] = headline;

  Json strat = Json::array();
  const auto& points = reports.front().at("stratification").at("points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::vector<double> v;
    for (const auto& r : reports) {
      const auto& p = r.at("stratification").at("points").at(i);
      if (!p.at("recall").is_null()) v.push_back(p.at("recall"));
    }
    strat.push_back(Json{{"min_refs", points.at(i).at("min_refs")}, {"recall", stat_json(v)}});
  }
  s["stratification"] = strat;

  std::vector<double> held, full;
  for (const auto& r : reports) {
    held.push_back(r.at("ranking_recall").at("held_out"));
    full.push_back(r.at("ranking_recall").at("full"));
  }
  s["ranking_recall"] = Json{{"held_out", stat_json(held)}, {"full", stat_json(full)}};

  Json checks = Json::object();
  for (const auto& [name, v] : reports.front().at("checks").items()) {
    std::size_t holds = 0;
    Json per_seed = Json::array();
    for (const auto& r : reports) {
      const bool b = r.at("checks").at(name);
      holds += b ? 1 : 0;
      per_seed.push_back(b);
    }
    checks[name] = Json{{"holds", holds}, {"seeds", reports.size()}, {"per_seed", per_seed}};
  }
  s["checks"] = checks;
  return s;
}

std::string render_summary_text(const Json& summary) {
  std::ostringstream os;
  const auto ms = [](const Json& st) { return fixed4(st.at("mean")) + " +- " + fixed4(st.at("std")); };
  os << "Summary over seeds " << summary.at("seeds").dump() << ", profile " << summary.at("profile").get<std::string>()
     << "\n\n";
  std::vector<std::vector<std::string>> t;
  for (const auto& h : summary.at("headline")) t.push_back({h.at("model"), ms(h.at("recall")), ms(h.at("bleu"))});
  os << "Headline (Recall@" << summary.at("recall_k").get<std::size_t>() << ", BLEU; mean +- sample std)\n"
     << table({"model", "R", "BLEU"}, t) << '\n';
  t.clear();
  for (const auto& p : summary.at("stratification")) t.push_back({cell(p.at("min_refs")), ms(p.at("recall"))});
  os << "Agreement stratification\n" << table({"min_refs", "R"}, t) << '\n';
  const auto& rr = summary.at("ranking_recall");
  os << "Ranking recall\n"
     << table({"setting", "R"}, {{"held-out", ms(rr.at("held_out"))}, {"FULL", ms(rr.at("full"))}}) << '\n';
  t.clear();
  for (const auto& [name, v] : summary.at("checks").items()) {
    std::string per;
    for (const auto& b : v.at("per_seed")) per += b.get<bool>() ? "y" : "n";
    t.push_back({name, std::to_string(v.at("holds").get<std::size_t>()) + "/" + std::to_string(v.at("seeds").get<std::size_t>()), per});
  }
  os << "Directional checks\n" << table({"check", "seeds", "per seed"}, t);
  return os.str();
}

void emit_reports(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("run directory " + dir + " does not exist");
  std::vector<std::pair<std::uint64_t, fs::path>> seed_dirs;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_directory() && name.rfind("seed-", 0) == 0) seed_dirs.emplace_back(std::stoull(name.substr(5)), e.path());
  }
  std::sort(seed_dirs.begin(), seed_dirs.end());
  if (seed_dirs.empty()) throw IoError("no seed-* directories in " + dir);
  std::vector<std::string> missing;
  for (const auto& [seed, path] : seed_dirs) {
    if (!fs::exists(path / "report.json")) missing.push_back((path / "report.json").string());
  }
  if (!missing.empty()) {
    std::string msg = "missing artifacts:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw IoError(msg);
  }
  std::vector<Json> reports;
  for (const auto& [seed, path] : seed_dirs) {
    Json r = Json::parse(read_file((path / "report.json").string()));
    write_file((path / "report.txt").string(), render_report_text(r));
    reports.push_back(std::move(r));
  }
  const Json s = summarize(reports);
  write_file(dir + "/summary.json", s.dump(2) + "\n");
  write_file(dir + "/summary.txt", render_summary_text(s));
}

}  // namespace compcap
