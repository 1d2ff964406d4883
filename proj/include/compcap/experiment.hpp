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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "compcap/config.hpp"
#include "compcap/decoding.hpp"
#include "compcap/error.hpp"
#include "compcap/evaluation.hpp"
#include "compcap/lexicon.hpp"
#include "compcap/splits.hpp"
#include "compcap/training.hpp"
#include "json.hpp"

namespace compcap {

/// A pipeline stage failed; `stage()` names it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

using Json = nlohmann::ordered_json;

/// Independent, stable RNG seed for one named purpose within a run.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

// Single stages. run_experiment chains them; the CLI exposes each one.

std::vector<SceneInstance> generate_stage(const ExperimentConfig& c, std::uint64_t seed, const Lexicon& lex);

struct SplitStage {
  SplitSpec spec;
  DatasetSplits splits;
  ValidationReport validation;
};

/// `group` selects one of the held-out groups; nullopt is the FULL setting,
/// which keeps `reserved_eval` out of training and tracks every default pair.
SplitStage split_stage(const ExperimentConfig& c, std::uint64_t seed, const std::vector<SceneInstance>& dataset,
                       const Lexicon& lex, std::optional<std::size_t> group,
                       const std::vector<std::int64_t>& reserved_eval = {});

Vocabulary vocab_stage(const ExperimentConfig& c, const std::vector<SceneInstance>& dataset,
                       const DatasetSplits& splits);

TrainResult train_stage(const ExperimentConfig& c, std::uint64_t seed, const std::string& setting, bool ranking,
                        const std::vector<SceneInstance>& dataset, const DatasetSplits& splits,
                        const Vocabulary& vocab, const Lexicon& lex, std::ostream* progress = nullptr,
                        std::ostream* log = nullptr);

struct DecodeStage {
  std::vector<DecodedCaptions> beam;
  std::vector<DecodedCaptions> rerank;  // empty unless requested
};

DecodeStage decode_stage(const ExperimentConfig& c, ModelParams& p, const Vocabulary& vocab,
                         const std::vector<SceneInstance>& dataset, const std::vector<std::int64_t>& ids,
                         bool rerank);

/// One seed of the full protocol: every held-out group plus the FULL run.
/// Writes artifacts under `dir` and returns the deterministic report that is
/// also stored as `dir/report.json`.
Json run_seed(const ExperimentConfig& c, std::uint64_t seed, const std::string& dir, std::ostream* progress = nullptr);

struct ManifestEntry {
  std::string path;  // relative to the run directory
  std::string sha1;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string config_hash;
  std::vector<ManifestEntry> files;
  std::string started;
  std::string finished;
};

/// Hashes every file below `dir` except manifest.json itself.
RunManifest build_manifest(const std::string& dir, const std::string& config_hash, std::string started,
                           std::string finished);
Json manifest_json(const RunManifest& m);

std::string config_hash(const ExperimentConfig& c);

/// All seeds, the cross-seed summary and the manifest under c.out_dir.
RunManifest run_experiment(const ExperimentConfig& c, std::ostream* progress = nullptr);

/// Cross-seed aggregate of per-seed reports: mean and sample stddev per cell
/// plus the per-seed directional checks.
Json summarize(const std::vector<Json>& reports);

std::string render_report_text(const Json& report);
std::string render_summary_text(const Json& summary);

/// Re-renders report.txt for every seed and summary.{json,txt} from the
/// report.json files in `dir`. Throws IoError naming any missing artifact.
void emit_reports(const std::string& dir);

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

}  // namespace compcap
