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

#include "compcap/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <istream>

#include "compcap/error.hpp"
#include "json.hpp"

namespace compcap {

std::string mode_name(DecodeMode m) { return m == DecodeMode::kRerank ? "rerank" : "beam"; }

DecodeMode parse_mode(const std::string& s) {
  if (s == "beam") return DecodeMode::kBeam;
  if (s == "rerank") return DecodeMode::kRerank;
  throw ConfigError("unknown decode mode '" + s + "' (expected beam or rerank)");
}

void DecodeConfig::validate() const {
  if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
  if (max_length < 1) throw ConfigError("max_length must be >= 1");
  if (k < 1 || k > beam_size) throw ConfigError("K must be in 1..beam_size");
}

namespace {

void require_regions(const Tensor& regions, const ModelConfig& c) {
  if (regions.rows() != c.R || regions.cols() != c.I) {
    throw DimensionError("regions " + regions.shape_string() + " do not match R x I = " + std::to_string(c.R) + "x" +
                         std::to_string(c.I));
  }
}

std::vector<char> allowed_tokens(std::size_t V, const std::vector<std::size_t>& banned) {
  std::vector<char> ok(V, 1);
  for (std::size_t b : banned) {
    if (b < V) ok[b] = 0;
  }
  return ok;
}

// Recurrent state of one hypothesis, one row per tensor.
struct RowState {
  std::vector<double> h_l, c_l, h_g, c_g;
};

Tensor stack(const std::vector<const std::vector<double>*>& rows) {
  const std::size_t w = rows.front()->size();
  Tensor out({rows.size(), w});
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i]->begin(), rows[i]->end(), out.row(i).begin());
  return out;
}

std::vector<double> row_copy(const Tensor& t, std::size_t r) { return {t.row(r).begin(), t.row(r).end()}; }

Tensor tile_rows(const Tensor& x, std::size_t times) {
  Tensor out({x.rows() * times, x.cols()});
  for (std::size_t k = 0; k < times; ++k) std::copy(x.span().begin(), x.span().end(), out.data() + k * x.size());
  return out;
}

}  // namespace

std::vector<BeamHypothesis> beam_search(const Tensor& regions, ModelParams& p, const DecodeConfig& config) {
  config.validate();
  const ModelConfig& c = p.config;
  require_regions(regions, c);
  const std::vector<char> allowed = allowed_tokens(c.V, config.banned);

  Tensor ve, a6;
  {
    ad::Tape t;
    const Bound b = bind(t, p);
    const ImageEncoding img = encode_images(t, b, c, t.constant(regions), 1, false);
    ve = t.value(img.ve);
    a6 = t.value(img.a6);
  }

  struct Entry {
    BeamHypothesis hyp;
    RowState state;
  };
  std::vector<Entry> beam(1);
  beam[0].hyp.tokens = {kBos};
  beam[0].state = {std::vector<double>(c.L), std::vector<double>(c.L), std::vector<double>(c.G),
                   std::vector<double>(c.G)};

  for (std::size_t step = 0; step < config.max_length; ++step) {
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < beam.size(); ++i) {
      if (!beam[i].hyp.finished) live.push_back(i);
    }
    if (live.empty()) break;
    const std::size_t n = live.size();

    ad::Tape t;
    const Bound b = bind(t, p);
    ImageEncoding img;
    img.batch = n;
    img.ve = t.constant(tile_rows(ve, n));
    img.a6 = t.constant(tile_rows(a6, n));
    std::vector<const std::vector<double>*> hl, cl, hg, cg;
    std::vector<std::size_t> ids;
    for (std::size_t i : live) {
      hl.push_back(&beam[i].state.h_l);
      cl.push_back(&beam[i].state.c_l);
      hg.push_back(&beam[i].state.h_g);
      cg.push_back(&beam[i].state.c_g);
      ids.push_back(beam[i].hyp.tokens.back());
    }
    DecoderState st{{t.constant(stack(hl)), t.constant(stack(cl))}, {t.constant(stack(hg)), t.constant(stack(cg))}};
    const StepOutput out = decoder_step(t, b, c, img, ids, st);
    const Tensor& probs = t.value(out.probs);
    const Tensor &h_l = t.value(st.enc.h), &c_l = t.value(st.enc.c), &h_g = t.value(st.gen.h),
                 &c_g = t.value(st.gen.c);

    struct Candidate {
      std::size_t parent;
      std::size_t row;  // live row of the parent, npos when carried over
      std::size_t token;
      double logprob;
    };
    constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::vector<Candidate> cands;
    std::size_t row = 0;
    for (std::size_t i = 0; i < beam.size(); ++i) {
      if (beam[i].hyp.finished) {
        cands.push_back({i, npos, 0, beam[i].hyp.logprob});
        continue;
      }
      const auto pr = probs.row(row);
      for (std::size_t tok = 0; tok < c.V; ++tok) {
        if (allowed[tok]) cands.push_back({i, row, tok, beam[i].hyp.logprob + std::log(pr[tok])});
      }
      ++row;
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Candidate& a, const Candidate& b) { return a.logprob > b.logprob; });
    if (cands.size() > config.beam_size) cands.resize(config.beam_size);

    std::vector<Entry> next;
    next.reserve(cands.size());
    for (const Candidate& cd : cands) {
      if (cd.row == npos) {
        next.push_back(beam[cd.parent]);
        continue;
      }
      Entry e;
      e.hyp.tokens = beam[cd.parent].hyp.tokens;
      e.hyp.tokens.push_back(cd.token);
      e.hyp.logprob = cd.logprob;
      e.hyp.finished = cd.token == kEos;
      e.state = {row_copy(h_l, cd.row), row_copy(c_l, cd.row), row_copy(h_g, cd.row), row_copy(c_g, cd.row)};
      next.push_back(std::move(e));
    }
    beam = std::move(next);
  }

  std::vector<BeamHypothesis> out;
  out.reserve(beam.size());
  for (auto& e : beam) out.push_back(std::move(e.hyp));
  return out;
}

std::vector<BeamHypothesis> rerank_by_similarity(std::vector<BeamHypothesis> hyps, const Tensor& regions,
                                                 ModelParams& p) {
  if (hyps.empty()) return hyps;
  std::vector<std::vector<std::size_t>> seqs;
  for (const auto& h : hyps) seqs.push_back(h.tokens);
  const std::vector<double> sims = similarity_scores(regions, seqs, p);
  for (std::size_t i = 0; i < hyps.size(); ++i) hyps[i].similarity = sims[i];
  std::stable_sort(hyps.begin(), hyps.end(),
                   [](const BeamHypothesis& a, const BeamHypothesis& b) { return a.similarity > b.similarity; });
  return hyps;
}

std::vector<std::vector<std::size_t>> greedy_decode(const std::vector<const Tensor*>& regions, ModelParams& p,
                                                    std::size_t max_length, const std::vector<std::size_t>& banned) {
  if (regions.empty()) return {};
  const ModelConfig& c = p.config;
  const std::size_t n = regions.size();
  Tensor stacked({n * c.R, c.I});
  for (std::size_t i = 0; i < n; ++i) {
    require_regions(*regions[i], c);
    std::copy(regions[i]->span().begin(), regions[i]->span().end(), stacked.data() + i * c.R * c.I);
  }
  const std::vector<char> allowed = allowed_tokens(c.V, banned);

  ad::Tape t;
  const Bound b = bind(t, p);
  const ImageEncoding img = encode_images(t, b, c, t.constant(std::move(stacked)), n, false);
  DecoderState st = zero_state(t, c, n);
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<char> done(n, 0);
  std::vector<std::size_t> ids(n, kBos);
  std::size_t remaining = n;
  for (std::size_t step = 0; step < max_length && remaining > 0; ++step) {
    const StepOutput so = decoder_step(t, b, c, img, ids, st);
    const Tensor& probs = t.value(so.probs);
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) {
        ids[i] = kPad;
        continue;
      }
      const auto pr = probs.row(i);
      std::size_t best = c.V;
      for (std::size_t tok = 0; tok < c.V; ++tok) {
        if (allowed[tok] && (best == c.V || pr[tok] > pr[best])) best = tok;
      }
      if (best == c.V) throw ConfigError("every token is banned");
      ids[i] = best;
      if (best == kEos) {
        done[i] = 1;
        --remaining;
      } else {
        out[i].push_back(best);
      }
    }
  }
  return out;
}

double sequence_logprob(const Tensor& regions, const std::vector<std::size_t>& tokens, ModelParams& p) {
  if (tokens.size() < 2) return 0.0;
  const std::span<const std::size_t> inputs(tokens.data(), tokens.size() - 1);
  const Tensor probs = forward_teacher_forced(regions, inputs, p);
  double lp = 0.0;
  for (std::size_t s = 0; s + 1 < tokens.size(); ++s) lp += std::log(probs.at(s, tokens[s + 1]));
  return lp;
}

namespace {

DecodedCaptions to_captions(std::int64_t id, const std::vector<BeamHypothesis>& hyps, std::size_t k,
                            const Vocabulary& vocab, bool with_similarities) {
  DecodedCaptions d;
  d.scene_id = id;
  for (std::size_t i = 0; i < std::min(k, hyps.size()); ++i) {
    d.captions.push_back(vocab.decode(hyps[i].tokens));
    d.logprobs.push_back(hyps[i].logprob);
    if (with_similarities) d.similarities.push_back(hyps[i].similarity);
  }
  return d;
}

}  // namespace

DecodedCaptions decode_topk(std::int64_t scene_id, const Tensor& regions, ModelParams& p, const DecodeConfig& config,
                            const Vocabulary& vocab) {
  std::vector<BeamHypothesis> hyps = beam_search(regions, p, config);
  const bool rerank = config.mode == DecodeMode::kRerank;
  if (rerank) hyps = rerank_by_similarity(std::move(hyps), regions, p);
  return to_captions(scene_id, hyps, config.k, vocab, rerank);
}

BothModes decode_both(std::int64_t scene_id, const Tensor& regions, ModelParams& p, const DecodeConfig& config,
                      const Vocabulary& vocab) {
  const std::vector<BeamHypothesis> hyps = beam_search(regions, p, config);
  BothModes out;
  out.beam = to_captions(scene_id, hyps, config.k, vocab, false);
  out.rerank = to_captions(scene_id, rerank_by_similarity(hyps, regions, p), config.k, vocab, true);
  return out;
}

std::string captions_json(const DecodedCaptions& d, bool with_similarities) {
  nlohmann::ordered_json j;
  j["scene_id"] = d.scene_id;
  j["captions"] = d.captions;
  j["logprobs"] = d.logprobs;
  if (with_similarities) j["similarities"] = d.similarities;
  return j.dump();
}

void write_captions(std::ostream& os, const std::vector<DecodedCaptions>& all, bool with_similarities) {
  for (const auto& d : all) os << captions_json(d, with_similarities) << '\n';
}

std::vector<DecodedCaptions> read_captions(std::istream& is) {
  std::vector<DecodedCaptions> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DecodedCaptions d;
      d.scene_id = j.at("scene_id").get<std::int64_t>();
      d.captions = j.at("captions").get<std::vector<std::string>>();
      if (j.contains("logprobs")) d.logprobs = j["logprobs"].get<std::vector<double>>();
      if (j.contains("similarities")) d.similarities = j["similarities"].get<std::vector<double>>();
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw IoError("captions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace compcap
