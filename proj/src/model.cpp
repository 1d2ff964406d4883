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

#include "compcap/model.hpp"

#include <algorithm>
#include <iostream>

#include "compcap/error.hpp"
#include "compcap/vocab.hpp"

namespace compcap {

void ModelConfig::validate() const {
  for (auto [v, name] : {std::pair{V, "V"}, {E, "E"}, {L, "L"}, {J, "J"}, {I, "I"}, {R, "R"}, {H, "H"}, {G, "G"},
                         {max_len, "max_len"}}) {
    if (v < 1) throw ConfigError(std::string("model dimension ") + name + " must be >= 1");
  }
}

ModelConfig ModelConfig::toy() { return ModelConfig{}; }

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.V = 10000;
  c.E = 300;
  c.L = 1000;
  c.J = 1024;
  c.I = 2048;
  c.R = 36;
  c.H = 512;
  c.G = 1000;
  return c;
}

std::size_t parameter_count(const ModelConfig& c) {
  return c.E * c.V + 4 * c.L * (c.E + c.L + 1) + c.J * c.L + c.J * c.I + c.J + c.H + c.H * c.J + c.H * c.L +
         c.V * c.G + 4 * c.G * (c.J + c.L + c.G + 1);
}

std::vector<Parameter*> ModelParams::parameters() {
  return {&W1, &W2, &W3, &W4, &W5, &W6, &W7, &W8, &enc.w_ih, &enc.w_hh, &enc.bias, &gen.w_ih, &gen.w_hh, &gen.bias};
}

std::vector<const Parameter*> ModelParams::parameters() const {
  auto ps = const_cast<ModelParams*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

Parameter* ModelParams::find(const std::string& name) {
  for (Parameter* p : parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

ModelParams init_params(const ModelConfig& c, std::mt19937_64& rng) {
  c.validate();
  ModelParams p;
  p.config = c;
  p.W1 = Parameter("W1", nn::uniform_init({c.E, c.V}, c.V, rng));
  p.W2 = Parameter("W2", nn::uniform_init({c.J, c.L}, c.L, rng));
  p.W3 = Parameter("W3", nn::uniform_init({c.J, c.I}, c.I, rng));
  p.W4 = Parameter("W4", nn::uniform_init({1, c.J}, c.J, rng));
  p.W5 = Parameter("W5", nn::uniform_init({1, c.H}, c.H, rng));
  p.W6 = Parameter("W6", nn::uniform_init({c.H, c.J}, c.J, rng));
  p.W7 = Parameter("W7", nn::uniform_init({c.H, c.L}, c.L, rng));
  p.W8 = Parameter("W8", nn::uniform_init({c.V, c.G}, c.G, rng));
  p.enc = nn::make_lstm("enc", c.E, c.L, rng);
  p.gen = nn::make_lstm("gen", c.J + c.L, c.G, rng);
  return p;
}

Bound bind(ad::Tape& t, ModelParams& p) {
  Bound b;
  b.W1 = t.param(p.W1);
  b.W2 = t.param(p.W2);
  b.W3 = t.param(p.W3);
  b.W4 = t.param(p.W4);
  b.W5 = t.param(p.W5);
  b.W6 = t.param(p.W6);
  b.W7 = t.param(p.W7);
  b.W8 = t.param(p.W8);
  b.enc_ih = t.param(p.enc.w_ih);
  b.enc_hh = t.param(p.enc.w_hh);
  b.enc_b = t.param(p.enc.bias);
  b.gen_ih = t.param(p.gen.w_ih);
  b.gen_hh = t.param(p.gen.w_hh);
  b.gen_b = t.param(p.gen.bias);
  return b;
}

ImageEncoding encode_images(ad::Tape& t, const Bound& b, const ModelConfig& c, ad::Var regions, std::size_t batch,
                            bool pool) {
  const Tensor& rv = t.value(regions);
  if (rv.rows() != batch * c.R || rv.cols() != c.I) {
    throw DimensionError("regions " + rv.shape_string() + " do not match " + std::to_string(batch) + " images of " +
                         std::to_string(c.R) + "x" + std::to_string(c.I));
  }
  ImageEncoding img;
  img.batch = batch;
  img.ve = ad::linear(t, regions, b.W3);
  img.a6 = ad::linear(t, img.ve, b.W6);
  if (pool) {
    const ad::Var scores = ad::reshape(t, ad::linear(t, img.ve, b.W4), {batch, c.R});
    img.beta = ad::softmax_rows(t, scores);
    img.v_star = ad::group_weighted_sum(t, img.beta, img.ve);
  }
  return img;
}

DecoderState zero_state(ad::Tape& t, const ModelConfig& c, std::size_t batch) {
  return {{t.constant(Tensor({batch, c.L})), t.constant(Tensor({batch, c.L}))},
          {t.constant(Tensor({batch, c.G})), t.constant(Tensor({batch, c.G}))}};
}

StepOutput decoder_step(ad::Tape& t, const Bound& b, const ModelConfig& c, const ImageEncoding& img,
                        std::span<const std::size_t> ids, DecoderState& state) {
  if (ids.size() != img.batch) {
    throw DimensionError("decoder step got " + std::to_string(ids.size()) + " tokens for " +
                         std::to_string(img.batch) + " images");
  }
  const ad::Var x = ad::embedding(t, b.W1, ids);
  state.enc = nn::lstm_cell(t, x, state.enc, b.enc_ih, b.enc_hh, b.enc_b);
  const ad::Var h_l = state.enc.h;

  const ad::Var a7 = ad::repeat_rows(t, ad::linear(t, h_l, b.W7), c.R);
  const ad::Var scores = ad::linear(t, ad::tanh(t, ad::add(t, img.a6, a7)), b.W5);
  StepOutput out;
  out.alpha = ad::softmax_rows(t, ad::reshape(t, scores, {img.batch, c.R}));
  const ad::Var v_hat = ad::group_weighted_sum(t, out.alpha, img.ve);

  state.gen = nn::lstm_cell(t, ad::concat_cols(t, v_hat, h_l), state.gen, b.gen_ih, b.gen_hh, b.gen_b);
  out.probs = ad::softmax_rows(t, ad::linear(t, state.gen.h, b.W8));
  return out;
}

ad::Var encode_captions(ad::Tape& t, const Bound& b, const ModelConfig& c,
                        const std::vector<std::vector<std::size_t>>& seqs) {
  if (seqs.empty()) throw DimensionError("encode_captions needs at least one sequence");
  std::size_t longest = 0;
  for (const auto& s : seqs) {
    if (s.empty()) throw DimensionError("encode_captions: empty token sequence");
    longest = std::max(longest, s.size());
  }
  const std::size_t n = seqs.size();
  nn::LstmState state{t.constant(Tensor({n, c.L})), t.constant(Tensor({n, c.L}))};
  std::vector<ad::Var> steps;
  std::vector<std::size_t> ids(n), last(n);
  for (std::size_t k = 0; k < longest; ++k) {
    for (std::size_t r = 0; r < n; ++r) {
      ids[r] = k < seqs[r].size() ? seqs[r][k] : kPad;
      last[r] = seqs[r].size() - 1;
    }
    state = nn::lstm_cell(t, ad::embedding(t, b.W1, ids), state, b.enc_ih, b.enc_hh, b.enc_b);
    steps.push_back(state.h);
  }
  return ad::linear(t, ad::gather_steps(t, steps, last), b.W2);
}

namespace {

Tensor row_of(const Tensor& m) { return m.reshaped({m.size()}); }

void require_regions(const Tensor& regions, const ModelConfig& c) {
  if (regions.rows() != c.R || regions.cols() != c.I) {
    throw DimensionError("regions " + regions.shape_string() + " do not match R x I = " + std::to_string(c.R) + "x" +
                         std::to_string(c.I));
  }
}

}  // namespace

CaptionEncoding encode_caption(std::span<const std::size_t> tokens, ModelParams& p) {
  if (tokens.empty()) throw DimensionError("encode_caption needs at least one token");
  const ModelConfig& c = p.config;
  ad::Tape t;
  const Bound b = bind(t, p);
  nn::LstmState s{t.constant(Tensor({1, c.L})), t.constant(Tensor({1, c.L}))};
  CaptionEncoding out;
  for (std::size_t tok : tokens) {
    const std::size_t id[1] = {tok};
    s = nn::lstm_cell(t, ad::embedding(t, b.W1, id), s, b.enc_ih, b.enc_hh, b.enc_b);
    out.h_steps.push_back(row_of(t.value(s.h)));
  }
  out.s_star = row_of(t.value(ad::linear(t, s.h, b.W2)));
  return out;
}

PooledImage embed_and_pool_image(const Tensor& regions, ModelParams& p) {
  require_regions(regions, p.config);
  ad::Tape t;
  const Bound b = bind(t, p);
  const ImageEncoding img = encode_images(t, b, p.config, t.constant(regions), 1, true);
  return {t.value(img.ve), row_of(t.value(img.v_star)), row_of(t.value(img.beta))};
}

Attention attend(const Tensor& ve, const Tensor& h_l, ModelParams& p) {
  const ModelConfig& c = p.config;
  if (ve.rows() != c.R || ve.cols() != c.J) throw DimensionError("attend: v^e must be R x J, got " + ve.shape_string());
  if (h_l.size() != c.L) throw DimensionError("attend: encoder state must have L entries, got " + h_l.shape_string());
  ad::Tape t;
  const Bound b = bind(t, p);
  const ad::Var vev = t.constant(ve);
  const ad::Var a7 = ad::repeat_rows(t, ad::linear(t, t.constant(h_l.reshaped({1, c.L})), b.W7), c.R);
  const ad::Var scores = ad::linear(t, ad::tanh(t, ad::add(t, ad::linear(t, vev, b.W6), a7)), b.W5);
  const ad::Var alpha = ad::softmax_rows(t, ad::reshape(t, scores, {1, c.R}));
  const ad::Var v_hat = ad::group_weighted_sum(t, alpha, vev);
  return {row_of(t.value(v_hat)), row_of(t.value(alpha))};
}

GenerationStep generation_step(const Tensor& v_hat, const Tensor& h_l, const Tensor& h_g, const Tensor& c_g,
                               ModelParams& p) {
  const ModelConfig& c = p.config;
  if (v_hat.size() != c.J || h_l.size() != c.L || h_g.size() != c.G || c_g.size() != c.G) {
    throw DimensionError("generation_step: expected sizes J=" + std::to_string(c.J) + ", L=" + std::to_string(c.L) +
                         ", G=" + std::to_string(c.G));
  }
  ad::Tape t;
  const Bound b = bind(t, p);
  const ad::Var in = ad::concat_cols(t, t.constant(v_hat.reshaped({1, c.J})), t.constant(h_l.reshaped({1, c.L})));
  const nn::LstmState s = nn::lstm_cell(t, in, {t.constant(h_g.reshaped({1, c.G})), t.constant(c_g.reshaped({1, c.G}))},
                                        b.gen_ih, b.gen_hh, b.gen_b);
  const ad::Var probs = ad::softmax_rows(t, ad::linear(t, s.h, b.W8));
  return {row_of(t.value(s.h)), row_of(t.value(s.c)), row_of(t.value(probs))};
}

Tensor forward_teacher_forced(const Tensor& regions, std::span<const std::size_t> tokens, ModelParams& p) {
  const ModelConfig& c = p.config;
  require_regions(regions, c);
  if (tokens.empty()) throw DimensionError("forward_teacher_forced needs at least one token");
  if (tokens.size() > c.max_len + 1) {
    std::cerr << "warning: caption of " << tokens.size() - 1 << " tokens truncated to " << c.max_len << '\n';
    tokens = tokens.first(c.max_len + 1);
  }
  ad::Tape t;
  const Bound b = bind(t, p);
  const ImageEncoding img = encode_images(t, b, c, t.constant(regions), 1, false);
  DecoderState state = zero_state(t, c, 1);
  Tensor out({tokens.size(), c.V});
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const StepOutput step = decoder_step(t, b, c, img, tokens.subspan(i, 1), state);
    const auto row = t.value(step.probs).row(0);
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

double similarity_score(const Tensor& regions, std::span<const std::size_t> tokens, ModelParams& p) {
  while (!tokens.empty() && tokens.back() == kEos) tokens = tokens.first(tokens.size() - 1);
  const PooledImage img = embed_and_pool_image(regions, p);
  const CaptionEncoding enc = encode_caption(tokens, p);
  return cosine_similarity(img.v_star.span(), enc.s_star.span());
}

std::vector<double> similarity_scores(const Tensor& regions, const std::vector<std::vector<std::size_t>>& seqs,
                                      ModelParams& p) {
  if (seqs.empty()) return {};
  const PooledImage img = embed_and_pool_image(regions, p);
  std::vector<std::vector<std::size_t>> trimmed = seqs;
  for (auto& s : trimmed) {
    while (!s.empty() && s.back() == kEos) s.pop_back();
  }
  ad::Tape t;
  const Bound b = bind(t, p);
  const Tensor& s_star = t.value(encode_captions(t, b, p.config, trimmed));
  std::vector<double> out(seqs.size());
  for (std::size_t r = 0; r < seqs.size(); ++r) out[r] = cosine_similarity(img.v_star.span(), s_star.row(r));
  return out;
}

}  // namespace compcap
