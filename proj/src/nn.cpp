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

#include "compcap/nn.hpp"

#include <cmath>

#include "compcap/error.hpp"

namespace compcap::nn {

Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
  Tensor out(std::move(shape));
  const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-a, a);
  for (double& v : out.span()) v = dist(rng);
  return out;
}

LstmParams make_lstm(const std::string& prefix, std::size_t input, std::size_t hidden, Rng& rng) {
  LstmParams p;
  p.w_ih = Parameter(prefix + ".w_ih", uniform_init({4 * hidden, input}, input, rng));
  p.w_hh = Parameter(prefix + ".w_hh", uniform_init({4 * hidden, hidden}, hidden, rng));
  Tensor bias({4 * hidden});
  for (std::size_t j = hidden; j < 2 * hidden; ++j) bias[j] = 1.0;
  p.bias = Parameter(prefix + ".bias", std::move(bias));
  return p;
}

ad::Var lstm_pointwise(ad::Tape& t, ad::Var gates, ad::Var c) {
  const Tensor& gv = t.value(gates);
  const Tensor& cv = t.value(c);
  const std::size_t batch = gv.rows(), hidden = cv.cols();
  if (gv.cols() != 4 * hidden || cv.rows() != batch) {
    throw DimensionError("lstm: gates " + gv.shape_string() + " do not fit cell state " + cv.shape_string());
  }
  // Cache activated gates and tanh(c') for the backward pass.
  Tensor act({batch, 5 * hidden});
  Tensor out({batch, 2 * hidden});
  for (std::size_t b = 0; b < batch; ++b) {
    auto g = gv.row(b);
    auto a = act.row(b);
    auto o = out.row(b);
    for (std::size_t j = 0; j < hidden; ++j) {
      const double ig = sigmoid(g[j]);
      const double fg = sigmoid(g[hidden + j]);
      const double cg = std::tanh(g[2 * hidden + j]);
      const double og = sigmoid(g[3 * hidden + j]);
      const double cn = fg * cv.at(b, j) + ig * cg;
      const double tc = std::tanh(cn);
      a[j] = ig, a[hidden + j] = fg, a[2 * hidden + j] = cg, a[3 * hidden + j] = og, a[4 * hidden + j] = tc;
      o[j] = og * tc;
      o[hidden + j] = cn;
    }
  }
  return t.record("lstm", std::move(out), {gates, c}, [gates, c, act = std::move(act)](ad::Tape& tp, const Tensor& g) {
    const Tensor& cv = tp.value(c);
    const std::size_t batch = cv.rows(), hidden = cv.cols();
    const bool want_gates = tp.requires_grad(gates), want_c = tp.requires_grad(c);
    Tensor* gg = want_gates ? &tp.grad(gates) : nullptr;
    Tensor* gc = want_c ? &tp.grad(c) : nullptr;
    for (std::size_t b = 0; b < batch; ++b) {
      auto a = act.row(b);
      auto go = g.row(b);
      for (std::size_t j = 0; j < hidden; ++j) {
        const double ig = a[j], fg = a[hidden + j], cg = a[2 * hidden + j], og = a[3 * hidden + j];
        const double tc = a[4 * hidden + j];
        const double dh = go[j];
        const double dc = go[hidden + j] + dh * og * (1.0 - tc * tc);
        if (gc) gc->at(b, j) += dc * fg;
        if (gg) {
          auto d = gg->row(b);
          d[j] += dc * cg * ig * (1.0 - ig);
          d[hidden + j] += dc * cv.at(b, j) * fg * (1.0 - fg);
          d[2 * hidden + j] += dc * ig * (1.0 - cg * cg);
          d[3 * hidden + j] += dh * tc * og * (1.0 - og);
        }
      }
    }
  });
}

LstmState lstm_cell(ad::Tape& t, ad::Var x, const LstmState& prev, ad::Var w_ih, ad::Var w_hh, ad::Var bias) {
  const std::size_t hidden = t.value(w_hh).cols();
  if (t.value(w_ih).rows() != 4 * hidden || t.value(w_hh).rows() != 4 * hidden || t.value(bias).size() != 4 * hidden) {
    throw DimensionError("lstm parameters inconsistent: w_ih " + t.value(w_ih).shape_string() + ", w_hh " +
                         t.value(w_hh).shape_string() + ", bias " + t.value(bias).shape_string());
  }
  if (t.value(prev.h).cols() != hidden || t.value(prev.c).cols() != hidden) {
    throw DimensionError("lstm state " + t.value(prev.h).shape_string() + " does not match hidden size " +
                         std::to_string(hidden));
  }
  ad::Var gates = ad::add(t, ad::linear(t, x, w_ih), ad::linear(t, prev.h, w_hh));
  gates = ad::add_bias(t, gates, bias);
  ad::Var c = prev.c;
  if (t.value(c).rank() == 1) c = ad::reshape(t, c, {1, hidden});
  const ad::Var hc = lstm_pointwise(t, gates, c);
  return {ad::slice_cols(t, hc, 0, hidden), ad::slice_cols(t, hc, hidden, 2 * hidden)};
}

}  // namespace compcap::nn
