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
#include <string>
#include <vector>

#include "compcap/autodiff.hpp"

namespace compcap::nn {

using Rng = std::mt19937_64;

/// Uniform(-a, a) with a = 1/sqrt(fan_in).
Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng);

/// Gate order along the 4H axis: input, forget, candidate, output.
struct LstmParams {
  Parameter w_ih;  // [4H x in]
  Parameter w_hh;  // [4H x H]
  Parameter bias;  // [4H]

  std::size_t input_size() const { return w_ih.value.cols(); }
  std::size_t hidden_size() const { return w_hh.value.cols(); }
  std::vector<Parameter*> parameters() { return {&w_ih, &w_hh, &bias}; }
};

/// Forget-gate bias starts at 1, the other biases at 0.
LstmParams make_lstm(const std::string& prefix, std::size_t input, std::size_t hidden, Rng& rng);

struct LstmState {
  ad::Var h;
  ad::Var c;
};

/// One step on a batch: x[B x in], h, c [B x H].
LstmState lstm_cell(ad::Tape& t, ad::Var x, const LstmState& prev, ad::Var w_ih, ad::Var w_hh, ad::Var bias);

/// Fused pointwise part of the cell: gates[B x 4H], c[B x H] -> [h' | c'] as [B x 2H].
ad::Var lstm_pointwise(ad::Tape& t, ad::Var gates, ad::Var c);

}  // namespace compcap::nn
