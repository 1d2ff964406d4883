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

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "compcap/tensor.hpp"

namespace compcap {

/// A trainable tensor with its accumulated gradient.
struct Parameter {
  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros_like(value)) {}

  void zero_grad() { grad.fill(0.0); }

  std::string name;
  Tensor value;
  Tensor grad;
};

namespace ad {

struct Var {
  std::uint32_t id = std::numeric_limits<std::uint32_t>::max();
  bool valid() const { return id != std::numeric_limits<std::uint32_t>::max(); }
};

/// Records primitive operations in execution order (which is a topological
/// order) and replays them backwards.
///
/// A Tape belongs to one thread. Parameters referenced through `param` must
/// outlive the tape.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Var constant(Tensor value);
  Var param(Parameter& p);

  /// Appends a computed node after checking it is finite. `backward` is
  /// dropped when no input requires a gradient, so inference-only tapes carry
  /// no closures.
  Var record(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(const char* op, Tensor value, std::span<const Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Accumulates the gradient of `loss` (a single-element node) times `seed`
  /// into every reachable Parameter::grad. Intermediate gradients are reset
  /// on each call, so calling twice doubles parameter gradients.
  void backward(Var loss, double seed = 1.0);

  /// Gradient buffer of `v` during backward(); allocated zeroed on first use.
  Tensor& grad(Var v);
  /// grad(v) += g, skipped when v needs no gradient.
  void accumulate(Var v, const Tensor& g);

  std::size_t size() const { return nodes_.size(); }
  /// Nodes whose backward step ran during the last backward() call.
  const std::vector<std::uint32_t>& last_visit_order() const { return visits_; }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Parameter* param = nullptr;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<char> has_grad_;
  std::vector<std::uint32_t> visits_;
};

// Differentiable primitives. Shapes follow the value-level functions in
// tensor.hpp; rank-1 operands act as single rows.

Var matmul(Tape& t, Var a, Var b);
Var transpose(Tape& t, Var a);
/// x[B x in] * W^T with W[out x in] (rank-1 W is one output).
Var linear(Tape& t, Var x, Var w);
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
/// x[B x n] + bias[n] broadcast over rows.
Var add_bias(Tape& t, Var x, Var bias);
Var activation(Tape& t, Var x, Activation kind);
inline Var tanh(Tape& t, Var x) { return activation(t, x, Activation::kTanh); }
inline Var sigmoid(Tape& t, Var x) { return activation(t, x, Activation::kSigmoid); }
Var slice_cols(Tape& t, Var x, std::size_t begin, std::size_t end);
Var concat_cols(Tape& t, Var a, Var b);
Var reshape(Tape& t, Var x, std::vector<std::size_t> shape);
/// Row b of the result is column ids[b] of table[E x V].
Var embedding(Tape& t, Var table, std::span<const std::size_t> ids);
/// Each row repeated `times` times consecutively: [B x n] -> [(B*times) x n].
Var repeat_rows(Tape& t, Var x, std::size_t times);
/// Whole matrix stacked `times` times: [R x n] -> [(times*R) x n].
Var tile(Tape& t, Var x, std::size_t times);
Var softmax_rows(Tape& t, Var x);
/// out[b] = sum_r w[b, r] * v[b*R + r]  with w[B x R], v[(B*R) x J].
Var group_weighted_sum(Tape& t, Var w, Var v);
/// Scalar: sum_b mask[b] * -log(max(p[b, target[b]], floor)).
Var neg_log_pick(Tape& t, Var probs, std::span<const std::size_t> targets, std::span<const double> mask,
                 double floor = kProbabilityFloor);
/// Rows scaled to unit L2 norm; zero rows raise NumericError.
Var l2_normalize_rows(Tape& t, Var x);
/// Row b taken from steps[step_of_row[b]].
Var gather_steps(Tape& t, std::span<const Var> steps, std::span<const std::size_t> step_of_row);
Var sum(Tape& t, Var x);
Var sum_squares(Tape& t, Var x);
/// Scalar cosine similarity of two rank-1 nodes.
Var cosine_similarity(Tape& t, Var u, Var v);
/// Scalar cross-entropy of one probability row.
Var cross_entropy_step(Tape& t, Var probs, std::size_t target, double floor = kProbabilityFloor);

/// Hard-negative bidirectional hinge on a similarity matrix S[i][j] =
/// cos(image i, caption j), averaged over rows. Entries whose `group` ids match
/// are never treated as negatives of each other.
Var hard_negative_hinge(Tape& t, Var sims, double margin, std::span<const int> group);

/// Same pairs as hard_negative_hinge, but each direction averages the hinge
/// over every valid negative instead of taking the hardest one.
Var mean_negative_hinge(Tape& t, Var sims, double margin, std::span<const int> group);

}  // namespace ad
}  // namespace compcap
