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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "compcap/checkpoint.hpp"
#include "compcap/config.hpp"
#include "compcap/error.hpp"
#include "compcap/experiment.hpp"
#include "compcap/io.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace compcap;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("compcap-" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

ModelParams small_params(std::size_t V, std::uint64_t seed) {
  ModelConfig c = ModelConfig::toy();
  c.V = V;
  Rng rng(seed);
  return init_params(c, rng);
}

Vocabulary vocab_of(std::size_t words) {
  std::vector<std::string> w;
  for (std::size_t i = 0; i < words; ++i) w.push_back("w" + std::to_string(i));
  return Vocabulary(w);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(COMPCAP_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("sha1 of a known string") {
  CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
  CHECK(sha1_digest("abc").size() == 20);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const Vocabulary vocab = vocab_of(26);
  const ModelParams p = small_params(vocab.size(), 3);
  const std::string bytes = serialize_checkpoint(p, vocab);
  const Checkpoint back = parse_checkpoint(bytes, p.config);
  CHECK(serialize_checkpoint(back.params, back.vocab) == bytes);
  CHECK(back.vocab.size() == vocab.size());
  const auto a = p.parameters();
  auto b = back.params.parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]->value.shape() == b[i]->value.shape());
    for (std::size_t j = 0; j < a[i]->value.size(); ++j) CHECK(a[i]->value[j] == b[i]->value[j]);
  }
}

TEST_CASE("checkpoint for a different vocabulary size names both affected matrices") {
  const Vocabulary vocab = vocab_of(26);
  const ModelParams p = small_params(vocab.size(), 4);
  const std::string bytes = serialize_checkpoint(p, vocab);
  ModelConfig wrong = p.config;
  wrong.V += 1;
  try {
    parse_checkpoint(bytes, wrong);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("W8") != std::string::npos);
    CHECK(msg.find("W1") != std::string::npos);
  }
}

TEST_CASE("damaged checkpoints are rejected") {
  const Vocabulary vocab = vocab_of(10);
  const std::string bytes = serialize_checkpoint(small_params(vocab.size(), 5), vocab);
  CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, bytes.size() / 2)), IoError);
  CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, 10)), IoError);
  std::string flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x10;
  CHECK_THROWS_AS(parse_checkpoint(flipped), IoError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/model.ckpt"), IoError);
}

TEST_CASE("config parsing") {
  std::istringstream ok("profile = toy\n[train]\nlr = 0.01\n[data]\nregions = 5\n[experiment]\nseeds = [7, 8]\n");
  const ExperimentConfig c = parse_config(ok);
  CHECK(c.train.lr == 0.01);
  CHECK(c.gen.regions == 5);
  CHECK(c.model.R == 5);
  CHECK(c.seeds == std::vector<std::uint64_t>{7, 8});

  std::istringstream unknown("[train]\nlearning_rate = 0.01\n");
  CHECK_THROWS_AS(parse_config(unknown), ConfigError);
  std::istringstream bad_value("[train]\nmax_epochs = many\n");
  CHECK_THROWS_AS(parse_config(bad_value), ConfigError);
  std::istringstream bad_profile("profile = huge\n");
  CHECK_THROWS_AS(parse_config(bad_profile), ConfigError);
  std::istringstream inconsistent("[decode]\nk = 3\n[eval]\nrecall_k = 5\n");
  CHECK_THROWS_AS(parse_config(inconsistent), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent.toml"), ConfigError);
}

TEST_CASE("profile flag overrides the file and the two profiles differ") {
  std::istringstream is("profile = toy\n");
  const ExperimentConfig c = parse_config(is, std::string("paper"));
  CHECK(c.profile == "paper");
  CHECK(c.model.V == 10000);
  CHECK(c.decode.beam_size == 100);
  CHECK(ExperimentConfig::defaults("toy").model.V < c.model.V);
}

TEST_CASE("config_to_string round-trips for both profiles") {
  for (const char* profile : {"toy", "paper"}) {
    ExperimentConfig c = ExperimentConfig::defaults(profile);
    c.train.margin = 0.125;
    c.seeds = {3, 1};
    const std::string text = config_to_string(c);
    std::istringstream is(text);
    CHECK(config_to_string(parse_config(is)) == text);
  }
  CHECK(config_keys().size() > 30);
}

TEST_CASE("derive_seed is stable and separates tags") {
  CHECK(derive_seed(1, "train:full") == derive_seed(1, "train:full"));
  CHECK(derive_seed(1, "train:full") != derive_seed(2, "train:full"));
  CHECK(derive_seed(1, "train:full") != derive_seed(1, "init:full"));
}

TEST_CASE("write_file creates parent directories and replaces content") {
  TempDir dir("write");
  const std::string path = dir / "a/b/c.txt";
  write_file(path, "one");
  write_file(path, "two");
  CHECK(read_file(path) == "two");
  CHECK(sha1_file(path) == sha1_hex("two"));
  CHECK_THROWS_AS(read_file(dir / "missing"), IoError);
}

TEST_CASE("report emission names missing artifacts") {
  TempDir dir("report");
  fs::create_directories(dir.path / "seed-1");
  try {
    emit_reports(dir.path.string());
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("report.json") != std::string::npos);
  }
}

TEST_CASE("cli exit codes") {
  TempDir dir("cli");
  CHECK(run_cli("") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("--help") == 0);

  {
    std::ofstream(dir / "bad.toml") << "[train]\nlearning_rate = 1\n";
  }
  CHECK(run_cli("generate --config " + (dir / "bad.toml") + " --out " + (dir / "x")) == 2);
  CHECK(run_cli("evaluate --out " + (dir / "empty")) == 1);
  CHECK(run_cli("decode --mode sample --out " + (dir / "empty")) == 2);

  {
    std::ofstream(dir / "small.toml") << "profile = toy\n[data]\nscenes = 50\n";
  }
  CHECK(run_cli("generate --config " + (dir / "small.toml") + " --seed 4 --out " + (dir / "gen")) == 0);
  CHECK(fs::exists(dir.path / "gen" / "dataset.jsonl"));
  CHECK(run_cli("report --out " + (dir / "gen")) == 1);
}
