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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "compcap/autodiff.hpp"
#include "compcap/nn.hpp"

namespace compcap {

struct ModelConfig {
  std::size_t V = 96;  // vocabulary
  std::size_t E = 16;  // word embedding
  std::size_t L = 32;  // encoder LSTM
  std::size_t J = 24;  // joint embedding
  std::size_t I = 64;  // region feature
  std::size_t R = 4;   // regions
  std::size_t H = 16;  // attention
  std::size_t G = 32;  // generation LSTM
  bool ranking_enabled = true;
  std::size_t max_len = 20;

  void validate() const;
  static ModelConfig toy();
  static ModelConfig paper();
};

/// Closed-form number of scalars in ModelParams.
std::size_t parameter_count(const ModelConfig& c);

struct ModelParams {
  ModelConfig config;
  Parameter W1;  // [E x V] word embeddings
  Parameter W2;  // [J x L] caption projection
  Parameter W3;  // [J x I] region projection
  Parameter W4;  // [1 x J] pooling scores
  Parameter W5;  // [1 x H] attention output
  Parameter W6;  // [H x J] attention, regions
  Parameter W7;  // [H x L] attention, encoder state
  Parameter W8;  // [V x G] output projection
  nn::LstmParams enc;  // input E, hidden L
  nn::LstmParams gen;  // input J + L, hidden G

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  Parameter* find(const std::string& name);
};

/// Uniform(+-1/sqrt(fan_in)) weights; LSTM forget bias 1, other biases 0.
ModelParams init_params(const ModelConfig& config, std::mt19937_64& rng);

/// Parameters bound to one tape.
struct Bound {
  ad::Var W1, W2, W3, W4, W5, W6, W7, W8;
  ad::Var enc_ih, enc_hh, enc_b;
  ad::Var gen_ih, gen_hh, gen_b;
};
Bound bind(ad::Tape& t, ModelParams& p);

/// Images of one batch: regions stacked as [(B*R) x I].
struct ImageEncoding {
  std::size_t batch = 0;
  ad::Var ve;      // [(B*R) x J]
  ad::Var a6;      // W6 * ve, [(B*R) x H]
  ad::Var v_star;  // [B x J], only when pooled
  ad::Var beta;    // [B x R], only when pooled
};

ImageEncoding encode_images(ad::Tape& t, const Bound& b, const ModelConfig& c, ad::Var regions, std::size_t batch,
                            bool pool);

struct DecoderState {
  nn::LstmState enc;
  nn::LstmState gen;
};

DecoderState zero_state(ad::Tape& t, const ModelConfig& c, std::size_t batch);

struct StepOutput {
  ad::Var probs;  // [B x V]
  ad::Var alpha;  // [B x R]
};

/// One decoder step: feeds ids[b] to the encoder LSTM, attends, and advances
/// the generation LSTM. Row b only ever reads row b of every input.
StepOutput decoder_step(ad::Tape& t, const Bound& b, const ModelConfig& c, const ImageEncoding& img,
                        std::span<const std::size_t> ids, DecoderState& state);

/// Encoder over a batch of token sequences padded with PAD; row n of the
/// result is s* of seqs[n], taken after its last token.
ad::Var encode_captions(ad::Tape& t, const Bound& b, const ModelConfig& c,
                        const std::vector<std::vector<std::size_t>>& seqs);

// Single-example forms of the model equations, for tests and inspection.

struct CaptionEncoding {
  Tensor s_star;                 // [J]
  std::vector<Tensor> h_steps;   // encoder hidden state per input token
};
/// Runs the encoder over `tokens` (fed as given) from a zero state.
CaptionEncoding encode_caption(std::span<const std::size_t> tokens, ModelParams& p);

struct PooledImage {
  Tensor ve;      // [R x J]
  Tensor v_star;  // [J]
  Tensor beta;    // [R]
};
PooledImage embed_and_pool_image(const Tensor& regions, ModelParams& p);

struct Attention {
  Tensor v_hat;  // [J]
  Tensor alpha;  // [R]
};
Attention attend(const Tensor& ve, const Tensor& h_l, ModelParams& p);

struct GenerationStep {
  Tensor h;
  Tensor c;
  Tensor probs;  // [V]
};
GenerationStep generation_step(const Tensor& v_hat, const Tensor& h_l, const Tensor& h_g, const Tensor& c_g,
                               ModelParams& p);

/// Step t consumes input token t and predicts the next one; `tokens` should
/// start with BOS. Inputs longer than max_len + 1 are truncated with a
/// warning on stderr. Returns [T x V].
Tensor forward_teacher_forced(const Tensor& regions, std::span<const std::size_t> tokens, ModelParams& p);

/// cos(v*, s*) with s* from the encoder run over `tokens` (BOS-prefixed, as
/// fed during training); a trailing EOS is not encoded.
double similarity_score(const Tensor& regions, std::span<const std::size_t> tokens, ModelParams& p);

/// similarity_score for many captions of one image, batched through the encoder.
std::vector<double> similarity_scores(const Tensor& regions, const std::vector<std::vector<std::size_t>>& seqs,
                                      ModelParams& p);

}  // namespace compcap
