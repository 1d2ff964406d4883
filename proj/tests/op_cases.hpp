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

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "compcap/autodiff.hpp"
#include "compcap/nn.hpp"
#include "gradcheck.hpp"

namespace compcap::testing {

// A randomized instance of one differentiable primitive, reduced to a scalar
// by a fixed random projection so that no gradient entry is trivially zero.
struct OpCase {
  std::vector<std::unique_ptr<Parameter>> params;
  std::function<ad::Var(ad::Tape&)> loss;

  std::vector<Parameter*> raw() const {
    std::vector<Parameter*> out;
    for (const auto& p : params) out.push_back(p.get());
    return out;
  }
};

using Rng = std::mt19937_64;

inline Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> d(0.0, scale);
  for (double& v : t.span()) v = d(rng);
  return t;
}

inline std::size_t dim(Rng& rng, std::size_t lo = 1, std::size_t hi = 5) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

class CaseBuilder {
 public:
  explicit CaseBuilder(Rng& rng) : rng_(rng) {}

  Parameter* param(std::vector<std::size_t> shape, double scale = 1.0) {
    c_.params.push_back(std::make_unique<Parameter>("p" + std::to_string(c_.params.size()),
                                                    random_tensor(std::move(shape), rng_, scale)));
    return c_.params.back().get();
  }

  // Reduces f's output with a random projection fixed at build time.
  OpCase finish(std::function<ad::Var(ad::Tape&)> f) {
    auto proj = std::make_shared<Tensor>();
    auto& rng = rng_;
    {
      ad::Tape probe;
      *proj = random_tensor(probe.value(f(probe)).shape(), rng);
    }
    c_.loss = [f = std::move(f), proj](ad::Tape& t) {
      const ad::Var out = f(t);
      if (t.value(out).size() == 1) return ad::scale(t, out, (*proj)[0]);
      return ad::sum(t, ad::mul(t, out, t.constant(*proj)));
    };
    return std::move(c_);
  }

  Rng& rng() { return rng_; }

 private:
  Rng& rng_;
  OpCase c_;
};

struct NamedOp {
  std::string name;
  std::function<OpCase(Rng&)> make;
};

inline std::vector<NamedOp> primitive_ops() {
  std::vector<NamedOp> ops;
  ops.push_back({"matmul", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t m = dim(r), k = dim(r), n = dim(r);
    Parameter* a = b.param({m, k});
    Parameter* c = b.param({k, n});
    return b.finish([a, c](ad::Tape& t) { return ad::matmul(t, t.param(*a), t.param(*c)); });
  }});
  ops.push_back({"transpose", [](Rng& r) {
    CaseBuilder b(r);
    Parameter* a = b.param({dim(r), dim(r)});
    return b.finish([a](ad::Tape& t) { return ad::transpose(t, t.param(*a)); });
  }});
  ops.push_back({"linear", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t n = dim(r), in = dim(r), out = dim(r);
    Parameter* x = b.param({n, in});
    Parameter* w = b.param({out, in});
    return b.finish([x, w](ad::Tape& t) { return ad::linear(t, t.param(*x), t.param(*w)); });
  }});
  ops.push_back({"add", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t m = dim(r), n = dim(r);
    Parameter* x = b.param({m, n});
    Parameter* y = b.param({m, n});
    return b.finish([x, y](ad::Tape& t) { return ad::add(t, t.param(*x), t.param(*y)); });
  }});
  ops.push_back({"sub", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t m = dim(r), n = dim(r);
    Parameter* x = b.param({m, n});
    Parameter* y = b.param({m, n});
    return b.finish([x, y](ad::Tape& t) { return ad::sub(t, t.param(*x), t.param(*y)); });
  }});
  ops.push_back({"mul", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t m = dim(r), n = dim(r);
    Parameter* x = b.param({m, n});
    Parameter* y = b.param({m, n});
    return b.finish([x, y](ad::Tape& t) { return ad::mul(t, t.param(*x), t.param(*y)); });
  }});
  ops.push_back({"scale", [](Rng& r) {
    CaseBuilder b(r);
    Parameter* x = b.param({dim(r), dim(r)});
    const double s = std::normal_distribution<double>(0.0, 2.0)(r);
    return b.finish([x, s](ad::Tape& t) { return ad::scale(t, t.param(*x), s); });
  }});
  ops.push_back({"add_bias", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t m = dim(r), n = dim(r);
    Parameter* x = b.param({m, n});
    Parameter* y = b.param({n});
    return b.finish([x, y](ad::Tape& t) { return ad::add_bias(t, t.param(*x), t.param(*y)); });
  }});
  ops.push_back({"tanh", [](Rng& r) {
    CaseBuilder b(r);
    Parameter* x = b.param({dim(r), dim(r)});
    return b.finish([x](ad::Tape& t) { return ad::tanh(t, t.param(*x)); });
  }});
  ops.push_back({"sigmoid", [](Rng& r) {
    CaseBuilder b(r);
    Parameter* x = b.param({dim(r), dim(r)}, 2.0);
    return b.finish([x](ad::Tape& t) { return ad::sigmoid(t, t.param(*x)); });
  }});
  ops.push_back({"slice_cols", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t n = dim(r, 2, 6);
    const std::size_t lo = dim(r, 0, n - 1);
    const std::size_t hi = dim(r, lo + 1, n);
    Parameter* x = b.param({dim(r), n});
    return b.finish([x, lo, hi](ad::Tape& t) { return ad::slice_cols(t, t.param(*x), lo, hi); });
  }});
  ops.push_back({"concat_cols", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t m = dim(r);
    Parameter* x = b.param({m, dim(r)});
    Parameter* y = b.param({m, dim(r)});
    return b.finish([x, y](ad::Tape& t) { return ad::concat_cols(t, t.param(*x), t.param(*y)); });
  }});
  ops.push_back({"reshape", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t m = dim(r), n = dim(r);
    Parameter* x = b.param({m, n});
    return b.finish([x, m, n](ad::Tape& t) { return ad::reshape(t, t.param(*x), {n, m}); });
  }});
  ops.push_back({"embedding", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t e = dim(r), v = dim(r, 2, 6), n = dim(r);
    Parameter* w = b.param({e, v});
    std::vector<std::size_t> ids(n);
    for (auto& id : ids) id = dim(r, 0, v - 1);
    return b.finish([w, ids](ad::Tape& t) { return ad::embedding(t, t.param(*w), ids); });
  }});
  ops.push_back({"repeat_rows", [](Rng& r) {
    CaseBuilder b(r);
    Parameter* x = b.param({dim(r), dim(r)});
    const std::size_t k = dim(r, 1, 3);
    return b.finish([x, k](ad::Tape& t) { return ad::repeat_rows(t, t.param(*x), k); });
  }});
  ops.push_back({"tile", [](Rng& r) {
    CaseBuilder b(r);
    Parameter* x = b.param({dim(r), dim(r)});
    const std::size_t k = dim(r, 1, 3);
    return b.finish([x, k](ad::Tape& t) { return ad::tile(t, t.param(*x), k); });
  }});
  ops.push_back({"softmax_rows", [](Rng& r) {
    CaseBuilder b(r);
    Parameter* x = b.param({dim(r), dim(r, 2, 6)}, 2.0);
    return b.finish([x](ad::Tape& t) { return ad::softmax_rows(t, t.param(*x)); });
  }});
  ops.push_back({"group_weighted_sum", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t batch = dim(r), regions = dim(r), j = dim(r);
    Parameter* w = b.param({batch, regions});
    Parameter* v = b.param({batch * regions, j});
    return b.finish([w, v](ad::Tape& t) { return ad::group_weighted_sum(t, t.param(*w), t.param(*v)); });
  }});
  ops.push_back({"neg_log_pick", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t n = dim(r), v = dim(r, 2, 6);
    Parameter* x = b.param({n, v});
    std::vector<std::size_t> targets(n);
    std::vector<double> mask(n);
    for (std::size_t i = 0; i < n; ++i) {
      targets[i] = dim(r, 0, v - 1);
      mask[i] = static_cast<double>(dim(r, 0, 1));
    }
    mask[0] = 1.0;
    return b.finish([x, targets, mask](ad::Tape& t) {
      return ad::neg_log_pick(t, ad::softmax_rows(t, t.param(*x)), targets, mask);
    });
  }});
  ops.push_back({"l2_normalize_rows", [](Rng& r) {
    CaseBuilder b(r);
    Parameter* x = b.param({dim(r), dim(r, 2, 6)});
    return b.finish([x](ad::Tape& t) { return ad::l2_normalize_rows(t, t.param(*x)); });
  }});
  ops.push_back({"gather_steps", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t steps = dim(r, 1, 4), n = dim(r), j = dim(r);
    std::vector<Parameter*> ps;
    for (std::size_t s = 0; s < steps; ++s) ps.push_back(b.param({n, j}));
    std::vector<std::size_t> which(n);
    for (auto& w : which) w = dim(r, 0, steps - 1);
    return b.finish([ps, which](ad::Tape& t) {
      std::vector<ad::Var> vs;
      for (Parameter* p : ps) vs.push_back(t.param(*p));
      return ad::gather_steps(t, vs, which);
    });
  }});
  ops.push_back({"sum", [](Rng& r) {
    CaseBuilder b(r);
    Parameter* x = b.param({dim(r), dim(r)});
    return b.finish([x](ad::Tape& t) { return ad::sum(t, t.param(*x)); });
  }});
  ops.push_back({"sum_squares", [](Rng& r) {
    CaseBuilder b(r);
    Parameter* x = b.param({dim(r), dim(r)});
    return b.finish([x](ad::Tape& t) { return ad::sum_squares(t, t.param(*x)); });
  }});
  ops.push_back({"cosine_similarity", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t n = dim(r, 2, 6);
    Parameter* u = b.param({n});
    Parameter* v = b.param({n});
    return b.finish([u, v](ad::Tape& t) { return ad::cosine_similarity(t, t.param(*u), t.param(*v)); });
  }});
  ops.push_back({"cross_entropy_step", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t v = dim(r, 2, 6);
    Parameter* x = b.param({v});
    const std::size_t target = dim(r, 0, v - 1);
    return b.finish([x, target](ad::Tape& t) {
      return ad::cross_entropy_step(t, ad::softmax_rows(t, t.param(*x)), target);
    });
  }});
  ops.push_back({"hard_negative_hinge", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t n = dim(r, 2, 6);
    Parameter* s = b.param({n, n}, 0.5);
    std::vector<int> group(n);
    for (std::size_t i = 0; i < n; ++i) group[i] = static_cast<int>(i);
    if (n > 2) group[1] = group[0];
    return b.finish([s, group](ad::Tape& t) { return ad::hard_negative_hinge(t, t.param(*s), 0.2, group); });
  }});
  ops.push_back({"mean_negative_hinge", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t n = dim(r, 2, 6);
    Parameter* s = b.param({n, n}, 0.5);
    std::vector<int> group(n);
    for (std::size_t i = 0; i < n; ++i) group[i] = static_cast<int>(i);
    if (n > 2) group[1] = group[0];
    return b.finish([s, group](ad::Tape& t) { return ad::mean_negative_hinge(t, t.param(*s), 0.2, group); });
  }});
  ops.push_back({"lstm_cell", [](Rng& r) {
    CaseBuilder b(r);
    const std::size_t n = dim(r, 1, 3), in = dim(r), h = dim(r);
    Parameter* x = b.param({n, in});
    Parameter* h0 = b.param({n, h});
    Parameter* c0 = b.param({n, h});
    Parameter* wih = b.param({4 * h, in}, 0.7);
    Parameter* whh = b.param({4 * h, h}, 0.7);
    Parameter* bias = b.param({4 * h}, 0.5);
    return b.finish([=](ad::Tape& t) {
      const nn::LstmState s = nn::lstm_cell(t, t.param(*x), {t.param(*h0), t.param(*c0)}, t.param(*wih),
                                            t.param(*whh), t.param(*bias));
      return ad::concat_cols(t, s.h, s.c);
    });
  }});
  return ops;
}

}  // namespace compcap::testing
