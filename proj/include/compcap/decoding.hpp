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

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "compcap/model.hpp"
#include "compcap/vocab.hpp"

namespace compcap {

enum class DecodeMode { kBeam, kRerank };

std::string mode_name(DecodeMode m);
DecodeMode parse_mode(const std::string& s);

struct DecodeConfig {
  std::size_t beam_size = 10;  // B
  std::size_t max_length = 20;  // generated tokens, EOS included
  std::size_t k = 5;            // captions returned
  DecodeMode mode = DecodeMode::kBeam;
  /// Tokens never generated.
  std::vector<std::size_t> banned = {kPad, kBos, kUnk};

  void validate() const;
};

struct BeamHypothesis {
  std::vector<std::size_t> tokens;  // BOS first; EOS last when finished
  double logprob = 0.0;
  bool finished = false;
  double similarity = 0.0;  // set by rerank_by_similarity
};

/// Closed-beam search without length normalization: finished hypotheses stay
/// in the pool and compete with expansions of the live ones. Returns up to B
/// hypotheses by descending log-probability.
std::vector<BeamHypothesis> beam_search(const Tensor& regions, ModelParams& p, const DecodeConfig& config);

/// Stable sort by similarity_score, highest first.
std::vector<BeamHypothesis> rerank_by_similarity(std::vector<BeamHypothesis> hyps, const Tensor& regions,
                                                 ModelParams& p);

/// Greedy decoding of many images at once; token lists exclude BOS and EOS.
std::vector<std::vector<std::size_t>> greedy_decode(const std::vector<const Tensor*>& regions, ModelParams& p,
                                                    std::size_t max_length,
                                                    const std::vector<std::size_t>& banned = {kPad, kBos, kUnk});

/// Sum of log p(token_t | tokens_<t) over a BOS-prefixed sequence.
double sequence_logprob(const Tensor& regions, const std::vector<std::size_t>& tokens, ModelParams& p);

struct DecodedCaptions {
  std::int64_t scene_id = 0;
  std::vector<std::string> captions;
  std::vector<double> logprobs;
  std::vector<double> similarities;  // rerank mode only
};

/// Top K captions with BOS/EOS stripped.
DecodedCaptions decode_topk(std::int64_t scene_id, const Tensor& regions, ModelParams& p, const DecodeConfig& config,
                            const Vocabulary& vocab);

/// Beam and rerank outputs from a single beam search.
struct BothModes {
  DecodedCaptions beam;
  DecodedCaptions rerank;
};
BothModes decode_both(std::int64_t scene_id, const Tensor& regions, ModelParams& p, const DecodeConfig& config,
                      const Vocabulary& vocab);

std::string captions_json(const DecodedCaptions& d, bool with_similarities);
void write_captions(std::ostream& os, const std::vector<DecodedCaptions>& all, bool with_similarities);
std::vector<DecodedCaptions> read_captions(std::istream& is);

}  // namespace compcap
