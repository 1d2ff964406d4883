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

// End-to-end acceptance run: prints one PASS/FAIL line per criterion and
// exits non-zero when any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "compcap/config.hpp"
#include "compcap/experiment.hpp"
#include "compcap/io.hpp"
#include "compcap/scenes.hpp"
#include "compcap/splits.hpp"
#include "op_cases.hpp"
#include "scenarios.hpp"

using namespace compcap;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  testing::Rng rng(20260101);
  double worst_op = 0.0;
  std::string worst_name;
  std::size_t ops = 0;
  for (const auto& op : testing::primitive_ops()) {
    ++ops;
    for (int trial = 0; trial < 20; ++trial) {
      testing::OpCase c = op.make(rng);
      const double e = testing::check_gradients(c.raw(), c.loss).max_rel_error;
      if (e > worst_op) worst_op = e, worst_name = op.name;
    }
  }
  double worst_joint = 0.0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    worst_joint = std::max(worst_joint, testing::joint_loss_gradcheck(500 + trial, 20).max_rel_error);
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << ops << " ops x 20 trials, worst " << fmt("%.2e", worst_op) << " (" << worst_name << "); joint loss 20 trials, worst "
    << fmt("%.2e", worst_joint) << "; " << fmt("%.1f", secs) << " s";
  return {worst_op < 1e-4 && worst_joint < 1e-4 && secs < 60.0, d.str()};
}

Outcome split_soundness() {
  const auto t0 = std::chrono::steady_clock::now();
  const Lexicon lex = build_lexicon();
  const auto data = generate_dataset(2000, GenConfig{}, lex);
  bool ok = true;
  double worst_removed = 0.0;
  const auto groups = group_pairs(default_pairs(lex), 4);
  for (const auto& g : groups) {
    Rng rng(static_cast<std::uint64_t>(g.group_id));
    const auto s = build_splits(data, g, lex, rng);
    const auto r = validate_splits(s, g, data, lex);
    ok = ok && r.ok() && s.removed_fraction <= 0.05 && g.held_out_pairs.size() == 6;
    worst_removed = std::max(worst_removed, s.removed_fraction);
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << groups.size() << " groups, largest removed fraction " << fmt("%.4f", worst_removed) << "; " << fmt("%.1f", secs)
    << " s";
  return {ok && groups.size() == 4 && secs < 30.0, d.str()};
}

Outcome metric_oracles() {
  const Lexicon lex = build_lexicon();
  bool oracle_ok = true;
  std::size_t compared = 0;
  std::uint64_t seed = 1;
  for (const ConceptPair& p : default_pairs(lex)) {
    const auto s = testing::labeled_scenes(lex, p, 200, 8, 5, seed++);
    for (std::size_t min_refs = 1; min_refs <= 3; ++min_refs) {
      const auto o = testing::oracle_recall(s, 5, min_refs);
      if (o.m == 0) continue;
      const auto r = recall_at_k(s.generated, s.references, s.ids, p, lex, 5, min_refs);
      oracle_ok = oracle_ok && r.m == o.m && r.hits == o.hits;
      ++compared;
    }
  }
  bool monotone = true;
  const auto pairs = default_pairs(lex);
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const ConceptPair& p = pairs[trial % pairs.size()];
    const auto s = testing::labeled_scenes(lex, p, 30, 10, 5, 1000 + trial);
    if (testing::oracle_recall(s, 1, 1).m == 0) continue;
    double prev = -1.0;
    for (std::size_t k = 1; k <= 10; ++k) {
      const double r = recall_at_k(s.generated, s.references, s.ids, p, lex, k).recall;
      monotone = monotone && r >= prev;
      prev = r;
    }
  }
  const double hand = bleu({{0, "the cat sat"}}, {{0, {"the cat sat down"}}});
  const double identity = bleu({{0, "a red bus is driving"}, {1, "a cat"}}, {{0, {"a red bus is driving"}}, {1, {"a cat"}}});
  std::ostringstream d;
  d << compared << " oracle comparisons over 24 pairs x 200 scenes " << (oracle_ok ? "exact" : "MISMATCH")
    << "; monotone in K " << (monotone ? "yes" : "no") << "; BLEU hand " << fmt("%.4f", hand) << ", identity "
    << fmt("%.4f", identity);
  return {oracle_ok && monotone && std::abs(hand - 0.7165) < 1e-3 && std::abs(identity - 1.0) < 1e-12, d.str()};
}

Outcome beam_optimality() {
  std::size_t matches = 0;
  for (std::uint64_t seed = 100; seed < 150; ++seed) matches += testing::beam_vs_exhaustive(seed).match;
  return {matches == 50, std::to_string(matches) + "/50 draws match the exhaustive argmax"};
}

Outcome gradnorm_behavior() {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> loss(0.01, 5.0), norm(0.0, 3.0);
  GradNorm g(0.01, 2.5);
  double worst = 0.0;
  bool positive = true;
  for (int step = 0; step < 2000; ++step) {
    g.step(loss(rng), loss(rng), norm(rng), norm(rng));
    const auto& w = g.weights();
    positive = positive && w.w_gen > 0.0 && w.w_rank > 0.0;
    worst = std::max(worst, std::abs(w.w_gen + w.w_rank - 2.0));
  }
  const auto run = testing::two_quadratic_gradnorm(200);
  const double ratio = run.final_gap / run.initial_gap;
  std::ostringstream d;
  d << "random stress worst |sum-2| " << fmt("%.1e", std::max(worst, run.worst_sum_error)) << "; two-quadratic gap "
    << fmt("%.4f", run.initial_gap) << " -> " << fmt("%.4f", run.final_gap) << " (" << fmt("%.1f%%", 100.0 * ratio)
    << ")";
  return {positive && run.weights_ok && worst <= 1e-9 && ratio < 0.1, d.str()};
}

struct ToyRun {
  Json summary;
  double seconds_per_seed = 0.0;
  std::string error;
};

ToyRun toy_run(const std::string& dir) {
  ToyRun out;
  ExperimentConfig c = ExperimentConfig::defaults("toy");
  c.seeds = {1, 2, 3, 4, 5};
  c.out_dir = dir;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    fs::remove_all(dir);
    run_experiment(c);
    out.summary = Json::parse(read_file(dir + "/summary.json"));
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.seconds_per_seed = seconds_since(t0) / static_cast<double>(c.seeds.size());
  return out;
}

std::string check_line(const Json& summary, const std::string& name, std::size_t* holds) {
  const Json& c = summary["checks"][name];
  *holds = c["holds"].get<std::size_t>();
  std::string per;
  for (const auto& v : c["per_seed"]) per += v.get<bool>() ? 'y' : 'n';
  return name + " " + std::to_string(*holds) + "/" + std::to_string(c["seeds"].get<std::size_t>()) + " [" + per + "]";
}

Outcome directional(const ToyRun& run) {
  if (!run.error.empty()) return {false, "toy run failed: " + run.error};
  std::size_t a = 0, b = 0, c = 0;
  std::ostringstream d;
  d << check_line(run.summary, "full_above_heldout", &a) << "; " << check_line(run.summary, "rerank_above_beam", &b)
    << "; " << check_line(run.summary, "ranking_within_20pct", &c) << "; " << fmt("%.0f", run.seconds_per_seed)
    << " s/seed";
  return {a >= 4 && b >= 4 && c >= 3 && run.seconds_per_seed <= 900.0, d.str()};
}

Outcome stratification(const ToyRun& run) {
  if (!run.error.empty()) return {false, "toy run failed: " + run.error};
  std::size_t holds = 0;
  std::ostringstream d;
  d << check_line(run.summary, "stratification_monotone", &holds) << "; mean R by min_refs:";
  for (const auto& p : run.summary["stratification"]) {
    d << ' ';
    const Json& m = p["recall"]["mean"];
    d << (m.is_null() ? std::string("-") : fmt("%.3f", m.get<double>()));
  }
  return {holds >= 4, d.str()};
}

Outcome determinism(const std::string& dir) {
  ExperimentConfig c = ExperimentConfig::defaults("toy");
  c.seeds = {11};
  c.train.max_epochs = 2;
  c.decode.beam_size = 20;
  c.out_dir = dir;
  std::string first, second;
  try {
    for (std::string* out : {&first, &second}) {
      fs::remove_all(dir);
      run_experiment(c);
      *out = read_file(dir + "/seed-11/report.json");
    }
  } catch (const std::exception& e) {
    return {false, std::string("run failed: ") + e.what()};
  }
  const bool same = first == second && !first.empty();
  return {same, "two run-all executions (seed 11, 2 epochs): report.json " + std::to_string(first.size()) + " bytes, " +
                    (same ? "byte-identical" : "DIFFERENT") + ", sha1 " + sha1_hex(first).substr(0, 12)};
}

Outcome aggregation() {
  const EvalReport r = testing::aggregate_reference_column(build_lexicon());
  return {r.pairs.size() == 24 && std::abs(r.mean_recall - 13.2) <= 0.05,
          "grand mean of the 24-pair column " + fmt("%.4f", r.mean_recall)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  std::string work = (fs::temp_directory_path() / "compcap-acceptance").string();
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 9));
  app.add_option("--work", work, "scratch directory for experiment runs");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9}
                                              : std::set<int>(only.begin(), only.end());

  std::optional<ToyRun> toy;
  const auto toy_once = [&]() -> const ToyRun& {
    if (!toy) toy = toy_run(work + "/toy");
    return *toy;
  };
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient suite", gradients},
      {"split soundness", split_soundness},
      {"metric oracles", metric_oracles},
      {"beam optimality", beam_optimality},
      {"GradNorm behavior", gradnorm_behavior},
      {"directional reproduction", [&] { return directional(toy_once()); }},
      {"agreement stratification", [&] { return stratification(toy_once()); }},
      {"determinism", [&] { return determinism(work + "/determinism"); }},
      {"aggregation fidelity", aggregation},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!selected.count(n)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << n << " [" << (o.pass ? "PASS" : "FAIL") << "] " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
