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

#include <cmath>
#include <random>

#include "compcap/autodiff.hpp"
#include "compcap/error.hpp"
#include "compcap/nn.hpp"
#include "compcap/optim.hpp"
#include "doctest.h"

using namespace compcap;
using doctest::Approx;

TEST_CASE("tensor shape invariants") {
  CHECK_THROWS_AS(Tensor({0, 2}), DimensionError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.reshaped({3, 2}).rows() == 3);
}

TEST_CASE("matmul") {
  const Tensor id = Tensor::matrix({{1, 0}, {0, 1}});
  const Tensor m = Tensor::matrix({{1, 2}, {3, 4}});
  CHECK(matmul(id, m) == m);
  CHECK(matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}}))[0] == 11.0);
  try {
    matmul(Tensor({3, 4}), Tensor({3, 2}));
    FAIL("expected a dimension error");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("[3x4]") != std::string::npos);
    CHECK(std::string(e.what()).find("[3x2]") != std::string::npos);
  }
}

TEST_CASE("softmax") {
  auto s = softmax(Tensor::vector({0, 0}));
  CHECK(s[0] == 0.5);
  CHECK(s[1] == 0.5);
  CHECK(softmax(Tensor::vector({5}))[0] == 1.0);
  s = softmax(Tensor::vector({1, 2, 3}));
  CHECK(s[0] == Approx(0.09003).epsilon(1e-4));
  CHECK(s[1] == Approx(0.24473).epsilon(1e-4));
  CHECK(s[2] == Approx(0.66524).epsilon(1e-4));
  CHECK(s.rank() == 1);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(0.0, 30.0);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor x({4, 7});
    for (double& v : x.span()) v = d(rng);
    const Tensor p = softmax(x);
    for (std::size_t r = 0; r < 4; ++r) {
      double z = 0.0;
      for (double v : p.row(r)) {
        CHECK(v > 0.0);
        z += v;
      }
      CHECK(std::abs(z - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("activations") {
  CHECK(activate(Tensor::vector({0}), Activation::kTanh)[0] == 0.0);
  CHECK(activate(Tensor::vector({0}), Activation::kSigmoid)[0] == 0.5);
  CHECK(activate(Tensor::vector({1}), Activation::kTanh)[0] == Approx(0.761594).epsilon(1e-6));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) <= 1.0);
}

TEST_CASE("cosine similarity") {
  const std::vector<double> u{0.3, -1.2, 2.0};
  CHECK(cosine_similarity(u, u) == Approx(1.0));
  CHECK(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(cosine_similarity(std::vector<double>{1, 1}, std::vector<double>{1, 0}) == Approx(0.70711).epsilon(1e-5));
  CHECK_THROWS_AS(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}), NumericError);
}

TEST_CASE("cross entropy step") {
  CHECK(cross_entropy_step(std::vector<double>{0, 1, 0}, 1) == 0.0);
  CHECK(cross_entropy_step(std::vector<double>{0.5, 0.5}, 0) == Approx(0.69315).epsilon(1e-5));
  CHECK(cross_entropy_step(std::vector<double>{0.0, 1.0}, 0) == Approx(27.631).epsilon(1e-3));
  CHECK_THROWS_AS(cross_entropy_step(std::vector<double>{1.0}, 1), DimensionError);
}

TEST_CASE("backward accumulates and visits each node once in reverse order") {
  Parameter w("w", Tensor::matrix({{1, 2, 3}, {4, 5, 6}}));
  const Tensor x = Tensor::vector({0.5, -1.0, 2.0});
  ad::Tape tape;
  const ad::Var wx = ad::matmul(tape, tape.param(w), tape.constant(x.reshaped({3, 1})));
  const ad::Var loss = ad::sum(tape, wx);
  tape.backward(loss);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(w.grad.at(i, j) == x[j]);
  const auto visits = tape.last_visit_order();
  for (std::size_t i = 1; i < visits.size(); ++i) CHECK(visits[i] < visits[i - 1]);

  const Tensor once = w.grad;
  tape.backward(loss);
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(w.grad[i] == 2.0 * once[i]);

  const ad::Var not_scalar = wx;
  CHECK_THROWS_AS(tape.backward(not_scalar), DimensionError);
}

TEST_CASE("recording a non-finite value raises") {
  ad::Tape tape;
  const ad::Var a = tape.constant(Tensor::vector({1e308}));
  CHECK_THROWS_AS(ad::scale(tape, a, 1e10), NumericError);
}

TEST_CASE("lstm cell") {
  nn::Rng rng(1);
  nn::LstmParams p = nn::make_lstm("enc", 3, 4, rng);
  for (std::size_t j = 0; j < 16; ++j) CHECK(p.bias.value[j] == (j >= 4 && j < 8 ? 1.0 : 0.0));
  for (double v : p.w_ih.value.span()) CHECK(std::abs(v) <= 1.0 / std::sqrt(3.0));

  SUBCASE("all-zero parameters give a zero hidden state") {
    p.w_ih.value.fill(0.0);
    p.w_hh.value.fill(0.0);
    p.bias.value.fill(0.0);
    ad::Tape t;
    const nn::LstmState s = nn::lstm_cell(t, t.constant(Tensor::vector({1, -2, 3})),
                                          {t.constant(Tensor({1, 4})), t.constant(Tensor({1, 4}))},
                                          t.param(p.w_ih), t.param(p.w_hh), t.param(p.bias));
    for (double v : t.value(s.h).span()) CHECK(v == 0.0);
  }

  SUBCASE("hand-set single unit") {
    // input gate saturated open, forget gate closed, output gate open.
    nn::LstmParams q;
    q.w_ih = Parameter("w_ih", Tensor::matrix({{0}, {0}, {0.7}, {0}}));
    q.w_hh = Parameter("w_hh", Tensor::matrix({{0}, {0}, {0}, {0}}));
    q.bias = Parameter("b", Tensor::vector({40, -40, 0, 40}));
    ad::Tape t;
    const nn::LstmState s = nn::lstm_cell(t, t.constant(Tensor::matrix({{1.0}})),
                                          {t.constant(Tensor({1, 1})), t.constant(Tensor::matrix({{5.0}}))},
                                          t.param(q.w_ih), t.param(q.w_hh), t.param(q.bias));
    CHECK(t.value(s.c)[0] == Approx(std::tanh(0.7)).epsilon(1e-9));
    CHECK(t.value(s.h)[0] == Approx(std::tanh(std::tanh(0.7))).epsilon(1e-9));
  }

  SUBCASE("cell state stays within |c| + 1") {
    std::normal_distribution<double> d(0.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
      Tensor x({2, 3}), h({2, 4}), c({2, 4});
      for (double& v : x.span()) v = d(rng);
      for (double& v : h.span()) v = d(rng);
      for (double& v : c.span()) v = d(rng);
      ad::Tape t;
      const nn::LstmState s = nn::lstm_cell(t, t.constant(x), {t.constant(h), t.constant(c)}, t.param(p.w_ih),
                                            t.param(p.w_hh), t.param(p.bias));
      for (std::size_t i = 0; i < c.size(); ++i) CHECK(std::abs(t.value(s.c)[i]) <= std::abs(c[i]) + 1.0);
    }
  }
}

TEST_CASE("clip_global_norm") {
  Parameter a("a", Tensor::vector({0, 0}));
  std::vector<Parameter*> ps{&a};
  a.grad = Tensor::vector({3, 4});
  CHECK(optim::clip_global_norm(ps, 10.0) == 5.0);
  CHECK(a.grad == Tensor::vector({3, 4}));
  a.grad = Tensor::vector({30, 40});
  CHECK(optim::clip_global_norm(ps, 10.0) == 50.0);
  CHECK(a.grad[0] == Approx(6.0));
  CHECK(a.grad[1] == Approx(8.0));
  a.grad = Tensor::vector({0, 0});
  optim::clip_global_norm(ps, 10.0);
  CHECK(a.grad == Tensor::vector({0, 0}));

  std::mt19937_64 rng(9);
  std::normal_distribution<double> d(0.0, 20.0);
  Parameter b("b", Tensor({3, 3}));
  std::vector<Parameter*> two{&a, &b};
  for (int trial = 0; trial < 50; ++trial) {
    for (double& v : a.grad.span()) v = d(rng);
    for (double& v : b.grad.span()) v = d(rng);
    const double before = optim::global_norm(two);
    optim::clip_global_norm(two, 10.0);
    const double after = optim::global_norm(two);
    CHECK(after <= before + 1e-12);
    CHECK(after <= 10.0 + 1e-9);
  }
}

TEST_CASE("adam") {
  Parameter p("p", Tensor::vector({1.0, -2.0}));
  optim::Adam adam({&p}, {.lr = 0.01});
  p.grad.fill(0.0);
  adam.step();
  CHECK(p.value == Tensor::vector({1.0, -2.0}));

  Parameter q("q", Tensor::vector({0.0}));
  optim::Adam one({&q}, {.lr = 0.01});
  q.grad[0] = 1.0;
  one.step();
  CHECK(q.value[0] == Approx(-0.01 / (1.0 + 1e-8)).epsilon(1e-12));

  Parameter r("r", Tensor::vector({0.0}));
  optim::Adam many({&r}, {.lr = 0.01});
  double prev = 0.0;
  for (int i = 0; i < 500; ++i) {
    prev = r.value[0];
    r.grad[0] = 2.5;
    many.step();
  }
  const double delta = r.value[0] - prev;
  CHECK(delta < 0.0);
  CHECK(std::abs(delta) >= 0.9 * 0.01);
  CHECK(std::abs(delta) <= 1.1 * 0.01);
}
