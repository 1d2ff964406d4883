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
#include <random>
#include <set>
#include <sstream>

#include "compcap/decoding.hpp"
#include "compcap/error.hpp"
#include "doctest.h"
#include "scenarios.hpp"

using namespace compcap;

namespace {

struct Setup {
  ModelParams p;
  Tensor regions;
};

Setup random_setup(std::uint64_t seed, double sharpen = 4.0) {
  ModelConfig c = ModelConfig::toy();
  c.V = 30;
  std::mt19937_64 rng(seed);
  Setup s{init_params(c, rng), Tensor({c.R, c.I})};
  for (double& v : s.p.W8.value.span()) v *= sharpen;
  std::normal_distribution<double> n;
  for (double& v : s.regions.span()) v = n(rng);
  return s;
}

std::vector<std::size_t> strip(const std::vector<std::size_t>& tokens) {
  std::vector<std::size_t> out(tokens.begin() + 1, tokens.end());
  if (!out.empty() && out.back() == kEos) out.pop_back();
  return out;
}

Vocabulary numbered_vocab(std::size_t n_words) {
  std::vector<std::string> w;
  for (std::size_t i = 0; i < n_words; ++i) w.push_back("w" + std::to_string(i));
  return Vocabulary(w);
}

}  // namespace

TEST_CASE("beam of 1 equals greedy decoding") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    Setup s = random_setup(seed);
    DecodeConfig dc;
    dc.beam_size = 1;
    dc.k = 1;
    dc.max_length = 12;
    const auto hyps = beam_search(s.regions, s.p, dc);
    const auto greedy = greedy_decode({&s.regions}, s.p, dc.max_length);
    REQUIRE(hyps.size() == 1);
    CHECK(strip(hyps.front().tokens) == greedy.front());
  }
}

TEST_CASE("beam top-1 equals the exhaustive optimum on a 3-token vocabulary") {
  for (std::uint64_t seed = 100; seed < 150; ++seed) {
    const auto t = testing::beam_vs_exhaustive(seed);
    INFO("seed " << seed << " beam " << t.beam_logprob << " oracle " << t.oracle_logprob);
    CHECK(t.match);
  }
}

TEST_CASE("exhaustive enumeration covers 15 sequences for length 3") {
  const auto all = testing::enumerate_three_token_sequences(3);
  CHECK(all.size() == 15);
  std::set<std::vector<std::size_t>> unique(all.begin(), all.end());
  CHECK(unique.size() == all.size());
}

TEST_CASE("stored log-probabilities match teacher-forced recomputation") {
  Setup s = random_setup(21);
  DecodeConfig dc;
  dc.beam_size = 6;
  dc.max_length = 8;
  for (const auto& h : beam_search(s.regions, s.p, dc)) {
    CHECK(std::abs(h.logprob - testing::teacher_forced_logprob(s.regions, h.tokens, s.p)) < 1e-9);
    CHECK(std::abs(h.logprob - sequence_logprob(s.regions, h.tokens, s.p)) < 1e-9);
  }
}

TEST_CASE("beam is sorted, duplicate-free, and finished hypotheses end in EOS") {
  for (std::uint64_t seed = 30; seed < 35; ++seed) {
    Setup s = random_setup(seed, 2.0);
    DecodeConfig dc;
    dc.beam_size = 10;
    dc.max_length = 6;
    const auto hyps = beam_search(s.regions, s.p, dc);
    CHECK(hyps.size() == 10);
    std::set<std::vector<std::size_t>> seen;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      CHECK(seen.insert(hyps[i].tokens).second);
      CHECK(hyps[i].tokens.front() == kBos);
      if (i) CHECK(hyps[i - 1].logprob >= hyps[i].logprob);
      if (hyps[i].finished) {
        CHECK(hyps[i].tokens.back() == kEos);
      } else {
        CHECK(hyps[i].tokens.size() == dc.max_length + 1);
      }
      for (std::size_t j = 1; j < hyps[i].tokens.size(); ++j) {
        CHECK(hyps[i].tokens[j] != kPad);
        CHECK(hyps[i].tokens[j] != kBos);
        CHECK(hyps[i].tokens[j] != kUnk);
      }
    }
  }
}

TEST_CASE("beam top-1 log-probability does not decrease with the beam size") {
  for (std::uint64_t seed = 40; seed < 46; ++seed) {
    Setup s = random_setup(seed, 2.0);
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t B = 1; B <= 8; ++B) {
      DecodeConfig dc;
      dc.beam_size = B;
      dc.k = 1;
      dc.max_length = 6;
      const double top = beam_search(s.regions, s.p, dc).front().logprob;
      INFO("seed " << seed << " B " << B);
      CHECK(top >= prev - 1e-12);
      prev = std::max(prev, top);
    }
  }
}

TEST_CASE("rerank is a stable permutation ordered by similarity") {
  Setup s = random_setup(50, 2.0);
  DecodeConfig dc;
  dc.beam_size = 8;
  dc.max_length = 6;
  const auto hyps = beam_search(s.regions, s.p, dc);
  const auto rr = rerank_by_similarity(hyps, s.regions, s.p);
  REQUIRE(rr.size() == hyps.size());
  std::multiset<std::vector<std::size_t>> a, b;
  for (const auto& h : hyps) a.insert(h.tokens);
  for (const auto& h : rr) b.insert(h.tokens);
  CHECK(a == b);
  double best = -2.0;
  for (const auto& h : rr) {
    CHECK(h.similarity == doctest::Approx(similarity_score(s.regions, h.tokens, s.p)).epsilon(1e-12));
    best = std::max(best, h.similarity);
  }
  CHECK(rr.front().similarity == best);
  for (std::size_t i = 1; i < rr.size(); ++i) CHECK(rr[i - 1].similarity >= rr[i].similarity);
}

TEST_CASE("rerank keeps beam order on ties") {
  Setup s = random_setup(51);
  std::vector<BeamHypothesis> hyps(4);
  for (std::size_t i = 0; i < hyps.size(); ++i) hyps[i].tokens = {kBos, 5, kEos}, hyps[i].logprob = -double(i);
  const auto rr = rerank_by_similarity(hyps, s.regions, s.p);
  for (std::size_t i = 0; i < rr.size(); ++i) CHECK(rr[i].logprob == -double(i));
}

TEST_CASE("rerank puts a lower log-probability caption first when it is more similar") {
  Setup s = random_setup(52);
  std::vector<BeamHypothesis> hyps(2);
  hyps[0].tokens = {kBos, 7, kEos};
  hyps[1].tokens = {kBos, 9, 11, kEos};
  hyps[0].logprob = -1.0;
  hyps[1].logprob = -5.0;
  const double s0 = similarity_score(s.regions, hyps[0].tokens, s.p);
  const double s1 = similarity_score(s.regions, hyps[1].tokens, s.p);
  REQUIRE(s0 != s1);
  if (s0 > s1) std::swap(hyps[0].tokens, hyps[1].tokens);
  const auto rr = rerank_by_similarity(hyps, s.regions, s.p);
  CHECK(rr.front().logprob == -5.0);
}

TEST_CASE("decode_topk: K = B in beam mode returns the whole beam in order") {
  Setup s = random_setup(60, 2.0);
  const Vocabulary vocab = numbered_vocab(26);
  DecodeConfig dc;
  dc.beam_size = 5;
  dc.k = 5;
  dc.max_length = 6;
  const auto hyps = beam_search(s.regions, s.p, dc);
  const DecodedCaptions d = decode_topk(9, s.regions, s.p, dc, vocab);
  REQUIRE(d.captions.size() == 5);
  CHECK(d.scene_id == 9);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(d.captions[i] == vocab.decode(hyps[i].tokens));
    CHECK(d.logprobs[i] == hyps[i].logprob);
    CHECK(d.captions[i].find("<bos>") == std::string::npos);
    CHECK(d.captions[i].find("<eos>") == std::string::npos);
  }
  CHECK(d.similarities.empty());
}

TEST_CASE("decode modes return the same candidate multiset") {
  Setup s = random_setup(61, 2.0);
  const Vocabulary vocab = numbered_vocab(26);
  DecodeConfig dc;
  dc.beam_size = 6;
  dc.k = 6;
  dc.max_length = 6;
  const BothModes both = decode_both(1, s.regions, s.p, dc, vocab);
  std::multiset<std::string> a(both.beam.captions.begin(), both.beam.captions.end());
  std::multiset<std::string> b(both.rerank.captions.begin(), both.rerank.captions.end());
  CHECK(a == b);
  CHECK(both.rerank.similarities.size() == 6);
  dc.mode = DecodeMode::kRerank;
  const DecodedCaptions r = decode_topk(1, s.regions, s.p, dc, vocab);
  CHECK(r.captions == both.rerank.captions);
}

TEST_CASE("DecodeConfig validation") {
  DecodeConfig dc;
  dc.k = 11;
  CHECK_THROWS_AS(dc.validate(), ConfigError);
  dc.k = 5;
  dc.max_length = 0;
  CHECK_THROWS_AS(dc.validate(), ConfigError);
  CHECK(parse_mode("rerank") == DecodeMode::kRerank);
  CHECK(mode_name(DecodeMode::kBeam) == "beam");
  CHECK_THROWS_AS(parse_mode("sample"), ConfigError);
}

TEST_CASE("captions JSONL round trip") {
  std::vector<DecodedCaptions> all(2);
  all[0] = {3, {"a red dog", "a dog"}, {-1.5, -2.25}, {0.5, 0.25}};
  all[1] = {8, {"a cat"}, {-0.125}, {0.75}};
  std::stringstream ss;
  write_captions(ss, all, true);
  const auto back = read_captions(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].scene_id == 3);
  CHECK(back[0].captions == all[0].captions);
  CHECK(back[0].logprobs == all[0].logprobs);
  CHECK(back[1].similarities == all[1].similarities);
}
