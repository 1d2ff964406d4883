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

#include "compcap/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "compcap/error.hpp"
#include "compcap/kernels.hpp"

namespace compcap::ad {
namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

Tensor scalar_tensor(double v) { return Tensor({1}, std::vector<double>{v}); }

}  // namespace

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::param(Parameter& p) {
  Node n;
  n.external = &p.value;
  n.param = &p;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::record(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::record(const char* op, Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  require_finite(value, op);
  Node n;
  n.value = std::move(value);
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(), [&](Var v) { return nodes_[v.id].requires_grad; });
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Tensor& Tape::value(Var v) const {
  const Node& n = nodes_[v.id];
  return n.external ? *n.external : n.value;
}

Tensor& Tape::grad(Var v) {
  if (!has_grad_[v.id]) {
    grads_[v.id] = Tensor::zeros_like(value(v));
    has_grad_[v.id] = 1;
  }
  return grads_[v.id];
}

void Tape::accumulate(Var v, const Tensor& g) {
  if (!requires_grad(v)) return;
  Tensor& slot = grad(v);
  kernels::active().axpy(g.size(), 1.0, g.data(), slot.data());
}

void Tape::backward(Var loss, double seed) {
  if (value(loss).size() != 1) {
    throw DimensionError("backward needs a scalar loss, got shape " + value(loss).shape_string());
  }
  grads_.assign(nodes_.size(), Tensor());
  has_grad_.assign(nodes_.size(), 0);
  visits_.clear();
  if (!requires_grad(loss)) return;
  grad(loss)[0] = seed;
  for (std::int64_t i = loss.id; i >= 0; --i) {
    const auto idx = static_cast<std::size_t>(i);
    if (!has_grad_[idx]) continue;
    Node& n = nodes_[idx];
    visits_.push_back(static_cast<std::uint32_t>(idx));
    if (n.param) {
      kernels::active().axpy(grads_[idx].size(), 1.0, grads_[idx].data(), n.param->grad.data());
    } else if (n.backward) {
      n.backward(*this, grads_[idx]);
    }
  }
  grads_.clear();
  has_grad_.clear();
}

Var matmul(Tape& t, Var a, Var b) {
  Tensor out = compcap::matmul(t.value(a), t.value(b));
  return t.record("matmul", std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value(a);
    const Tensor& bv = tp.value(b);
    const auto& k = kernels::active();
    if (tp.requires_grad(a)) {
      const Tensor bt = compcap::transpose(bv);
      k.gemm_nn(g.rows(), av.cols(), g.cols(), g.data(), bt.data(), tp.grad(a).data());
    }
    if (tp.requires_grad(b)) k.gemm_tn(av.cols(), g.cols(), av.rows(), av.data(), g.data(), tp.grad(b).data());
  });
}

Var transpose(Tape& t, Var a) {
  return t.record("transpose", compcap::transpose(t.value(a)), {a},
                  [a](Tape& tp, const Tensor& g) {
                    Tensor gt = compcap::transpose(g);
                    tp.accumulate(a, gt.reshaped(tp.value(a).shape()));
                  });
}

Var linear(Tape& t, Var x, Var w) {
  const Tensor& xv = t.value(x);
  const Tensor& wv = t.value(w);
  if (xv.cols() != wv.cols()) {
    throw DimensionError("linear: input " + xv.shape_string() + " does not fit weight " + wv.shape_string());
  }
  const Tensor wt = compcap::transpose(wv);
  Tensor out({xv.rows(), wv.rows()});
  kernels::active().gemm_nn(xv.rows(), wv.rows(), xv.cols(), xv.data(), wt.data(), out.data());
  return t.record("linear", std::move(out), {x, w}, [x, w](Tape& tp, const Tensor& g) {
    const Tensor& xv = tp.value(x);
    const Tensor& wv = tp.value(w);
    const auto& k = kernels::active();
    if (tp.requires_grad(x)) k.gemm_nn(g.rows(), wv.cols(), g.cols(), g.data(), wv.data(), tp.grad(x).data());
    if (tp.requires_grad(w)) k.gemm_tn(wv.rows(), wv.cols(), g.rows(), g.data(), xv.data(), tp.grad(w).data());
  });
}

Var add(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same_shape(av, bv, "add");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return t.record("add", std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same_shape(av, bv, "sub");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return t.record("sub", std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    tp.accumulate(a, g);
    if (tp.requires_grad(b)) kernels::active().axpy(g.size(), -1.0, g.data(), tp.grad(b).data());
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same_shape(av, bv, "mul");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return t.record("mul", std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value(a);
    const Tensor& bv = tp.value(b);
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Tape& t, Var a, double s) {
  Tensor out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  return t.record("scale", std::move(out), {a}, [a, s](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) kernels::active().axpy(g.size(), s, g.data(), tp.grad(a).data());
  });
}

Var add_bias(Tape& t, Var x, Var bias) {
  const Tensor& xv = t.value(x);
  const Tensor& bv = t.value(bias);
  if (bv.size() != xv.cols()) {
    throw DimensionError("add_bias: bias " + bv.shape_string() + " does not fit " + xv.shape_string());
  }
  Tensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bv[j];
  }
  return t.record("add_bias", std::move(out), {x, bias}, [x, bias](Tape& tp, const Tensor& g) {
    tp.accumulate(x, g);
    if (tp.requires_grad(bias)) {
      Tensor& gb = tp.grad(bias);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto row = g.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) gb[j] += row[j];
      }
    }
  });
}

Var activation(Tape& t, Var x, Activation kind) {
  Tensor out = compcap::activate(t.value(x), kind);
  const char* op = kind == Activation::kTanh ? "tanh" : "sigmoid";
  const auto id = static_cast<std::uint32_t>(t.size());
  return t.record(op, std::move(out), {x}, [x, kind, id](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(Var{id});
    Tensor& gx = tp.grad(x);
    if (kind == Activation::kTanh) {
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
    }
  });
}

Var slice_cols(Tape& t, Var x, std::size_t begin, std::size_t end) {
  const Tensor& xv = t.value(x);
  if (begin >= end || end > xv.cols()) {
    throw DimensionError("slice_cols [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of range for " +
                         xv.shape_string());
  }
  const std::size_t w = end - begin;
  Tensor out({xv.rows(), w});
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    std::copy_n(xv.row(r).begin() + static_cast<std::ptrdiff_t>(begin), w, out.row(r).begin());
  }
  return t.record("slice_cols", std::move(out), {x}, [x, begin, w](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad(x);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto src = g.row(r);
      auto dst = gx.row(r);
      for (std::size_t j = 0; j < w; ++j) dst[begin + j] += src[j];
    }
  });
}

Var concat_cols(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  if (av.rows() != bv.rows()) {
    throw DimensionError("concat_cols row mismatch: " + av.shape_string() + " vs " + bv.shape_string());
  }
  const std::size_t ca = av.cols(), cb = bv.cols();
  Tensor out({av.rows(), ca + cb});
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy_n(av.row(r).begin(), ca, out.row(r).begin());
    std::copy_n(bv.row(r).begin(), cb, out.row(r).begin() + static_cast<std::ptrdiff_t>(ca));
  }
  return t.record("concat_cols", std::move(out), {a, b}, [a, b, ca, cb](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad(a);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < ca; ++j) ga.at(r, j) += g.at(r, j);
    }
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad(b);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t j = 0; j < cb; ++j) gb.at(r, j) += g.at(r, ca + j);
    }
  });
}

Var reshape(Tape& t, Var x, std::vector<std::size_t> shape) {
  Tensor out = t.value(x).reshaped(std::move(shape));
  return t.record("reshape", std::move(out), {x}, [x](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad(x);
    kernels::active().axpy(g.size(), 1.0, g.data(), gx.data());
  });
}

Var embedding(Tape& t, Var table, std::span<const std::size_t> ids) {
  const Tensor& w = t.value(table);
  const std::size_t dim = w.rows(), vocab = w.cols();
  Tensor out({ids.size(), dim});
  for (std::size_t b = 0; b < ids.size(); ++b) {
    if (ids[b] >= vocab) {
      throw DimensionError("embedding: token id " + std::to_string(ids[b]) + " >= vocabulary " + std::to_string(vocab));
    }
    for (std::size_t e = 0; e < dim; ++e) out.at(b, e) = w.at(e, ids[b]);
  }
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  return t.record("embedding", std::move(out), {table}, [table, idv = std::move(idv)](Tape& tp, const Tensor& g) {
    Tensor& gw = tp.grad(table);
    for (std::size_t b = 0; b < idv.size(); ++b)
      for (std::size_t e = 0; e < g.cols(); ++e) gw.at(e, idv[b]) += g.at(b, e);
  });
}

Var repeat_rows(Tape& t, Var x, std::size_t times) {
  const Tensor& xv = t.value(x);
  const std::size_t n = xv.cols();
  Tensor out({xv.rows() * times, n});
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t k = 0; k < times; ++k) std::copy_n(xv.row(r).begin(), n, out.row(r * times + k).begin());
  return t.record("repeat_rows", std::move(out), {x}, [x, times](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad(x);
    const auto& k = kernels::active();
    for (std::size_t r = 0; r < gx.rows(); ++r)
      for (std::size_t j = 0; j < times; ++j) k.axpy(gx.cols(), 1.0, g.row(r * times + j).data(), gx.row(r).data());
  });
}

Var tile(Tape& t, Var x, std::size_t times) {
  const Tensor& xv = t.value(x);
  Tensor out({xv.rows() * times, xv.cols()});
  for (std::size_t k = 0; k < times; ++k) std::copy_n(xv.data(), xv.size(), out.data() + k * xv.size());
  return t.record("tile", std::move(out), {x}, [x, times](Tape& tp, const Tensor& g) {
    Tensor& gx = tp.grad(x);
    for (std::size_t k = 0; k < times; ++k) kernels::active().axpy(gx.size(), 1.0, g.data() + k * gx.size(), gx.data());
  });
}

Var softmax_rows(Tape& t, Var x) {
  Tensor out = compcap::softmax(t.value(x));
  const auto id = static_cast<std::uint32_t>(t.size());
  return t.record("softmax", std::move(out), {x}, [x, id](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(Var{id});
    Tensor& gx = tp.grad(x);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      auto yr = y.row(r);
      auto gr = g.row(r);
      double dotp = 0.0;
      for (std::size_t j = 0; j < yr.size(); ++j) dotp += gr[j] * yr[j];
      auto out = gx.row(r);
      for (std::size_t j = 0; j < yr.size(); ++j) out[j] += yr[j] * (gr[j] - dotp);
    }
  });
}

Var group_weighted_sum(Tape& t, Var w, Var v) {
  const Tensor& wv = t.value(w);
  const Tensor& vv = t.value(v);
  const std::size_t batch = wv.rows(), regions = wv.cols(), dim = vv.cols();
  if (vv.rows() != batch * regions) {
    throw DimensionError("group_weighted_sum: weights " + wv.shape_string() + " do not fit values " + vv.shape_string());
  }
  Tensor out({batch, dim});
  const auto& k = kernels::active();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t r = 0; r < regions; ++r) k.axpy(dim, wv.at(b, r), vv.row(b * regions + r).data(), out.row(b).data());
  return t.record("group_weighted_sum", std::move(out), {w, v}, [w, v](Tape& tp, const Tensor& g) {
    const Tensor& wv = tp.value(w);
    const Tensor& vv = tp.value(v);
    const std::size_t batch = wv.rows(), regions = wv.cols(), dim = vv.cols();
    const auto& k = kernels::active();
    if (tp.requires_grad(w)) {
      Tensor& gw = tp.grad(w);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t r = 0; r < regions; ++r) gw.at(b, r) += k.dot(dim, g.row(b).data(), vv.row(b * regions + r).data());
    }
    if (tp.requires_grad(v)) {
      Tensor& gv = tp.grad(v);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t r = 0; r < regions; ++r) k.axpy(dim, wv.at(b, r), g.row(b).data(), gv.row(b * regions + r).data());
    }
  });
}

Var neg_log_pick(Tape& t, Var probs, std::span<const std::size_t> targets, std::span<const double> mask, double floor) {
  const Tensor& p = t.value(probs);
  if (targets.size() != p.rows() || mask.size() != p.rows()) {
    throw DimensionError("neg_log_pick: " + std::to_string(targets.size()) + " targets / " +
                         std::to_string(mask.size()) + " mask entries for " + p.shape_string());
  }
  double total = 0.0;
  for (std::size_t b = 0; b < p.rows(); ++b) {
    if (mask[b] == 0.0) continue;
    total += mask[b] * compcap::cross_entropy_step(p.row(b), targets[b], floor);
  }
  std::vector<std::size_t> tv(targets.begin(), targets.end());
  std::vector<double> mv(mask.begin(), mask.end());
  return t.record("neg_log_pick", scalar_tensor(total), {probs},
                  [probs, tv = std::move(tv), mv = std::move(mv), floor](Tape& tp, const Tensor& g) {
                    const Tensor& p = tp.value(probs);
                    Tensor& gp = tp.grad(probs);
                    for (std::size_t b = 0; b < p.rows(); ++b) {
                      const double pv = p.at(b, tv[b]);
                      if (mv[b] == 0.0 || pv < floor) continue;
                      gp.at(b, tv[b]) -= g[0] * mv[b] / pv;
                    }
                  });
}

Var l2_normalize_rows(Tape& t, Var x) {
  const Tensor& xv = t.value(x);
  Tensor out = xv;
  std::vector<double> norms(xv.rows());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    norms[r] = compcap::l2_norm(xv.row(r));
    if (norms[r] == 0.0) throw NumericError("l2_normalize_rows: row " + std::to_string(r) + " has zero norm");
    for (double& v : out.row(r)) v /= norms[r];
  }
  const auto id = static_cast<std::uint32_t>(t.size());
  return t.record("l2_normalize_rows", std::move(out), {x}, [x, id, norms = std::move(norms)](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(Var{id});
    Tensor& gx = tp.grad(x);
    const auto& k = kernels::active();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const double yg = k.dot(y.cols(), y.row(r).data(), g.row(r).data());
      auto yr = y.row(r);
      auto gr = g.row(r);
      auto out = gx.row(r);
      for (std::size_t j = 0; j < yr.size(); ++j) out[j] += (gr[j] - yr[j] * yg) / norms[r];
    }
  });
}

Var gather_steps(Tape& t, std::span<const Var> steps, std::span<const std::size_t> step_of_row) {
  if (steps.empty()) throw DimensionError("gather_steps: no steps");
  const Tensor& first = t.value(steps[0]);
  if (step_of_row.size() != first.rows()) throw DimensionError("gather_steps: row count mismatch");
  Tensor out({first.rows(), first.cols()});
  for (std::size_t b = 0; b < step_of_row.size(); ++b) {
    if (step_of_row[b] >= steps.size()) throw DimensionError("gather_steps: step index out of range");
    const Tensor& src = t.value(steps[step_of_row[b]]);
    std::copy_n(src.row(b).begin(), src.cols(), out.row(b).begin());
  }
  std::vector<Var> sv(steps.begin(), steps.end());
  std::vector<std::size_t> rows(step_of_row.begin(), step_of_row.end());
  return t.record("gather_steps", std::move(out), steps, [sv, rows = std::move(rows)](Tape& tp, const Tensor& g) {
    for (std::size_t b = 0; b < rows.size(); ++b) {
      const Var src = sv[rows[b]];
      if (!tp.requires_grad(src)) continue;
      auto dst = tp.grad(src).row(b);
      auto gr = g.row(b);
      for (std::size_t j = 0; j < gr.size(); ++j) dst[j] += gr[j];
    }
  });
}

Var sum(Tape& t, Var x) {
  const Tensor& xv = t.value(x);
  double s = 0.0;
  for (double v : xv.span()) s += v;
  return t.record("sum", scalar_tensor(s), {x}, [x](Tape& tp, const Tensor& g) {
    for (double& v : tp.grad(x).span()) v += g[0];
  });
}

Var sum_squares(Tape& t, Var x) {
  const Tensor& xv = t.value(x);
  double s = 0.0;
  for (double v : xv.span()) s += v * v;
  return t.record("sum_squares", scalar_tensor(s), {x}, [x](Tape& tp, const Tensor& g) {
    const Tensor& xv = tp.value(x);
    Tensor& gx = tp.grad(x);
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += 2.0 * g[0] * xv[i];
  });
}

Var cosine_similarity(Tape& t, Var u, Var v) {
  const Var un = l2_normalize_rows(t, u);
  const Var vn = l2_normalize_rows(t, v);
  return sum(t, mul(t, un, vn));
}

Var cross_entropy_step(Tape& t, Var probs, std::size_t target, double floor) {
  const std::size_t targets[1] = {target};
  const double mask[1] = {1.0};
  return neg_log_pick(t, probs, targets, mask, floor);
}

Var hard_negative_hinge(Tape& t, Var sims, double margin, std::span<const int> group) {
  const Tensor& s = t.value(sims);
  const std::size_t n = s.rows();
  if (s.cols() != n) throw DimensionError("hard_negative_hinge needs a square matrix, got " + s.shape_string());
  if (n < 2) throw DimensionError("hard_negative_hinge needs a batch of at least 2 (no in-batch negatives)");
  if (group.size() != n) throw DimensionError("hard_negative_hinge: group ids do not match batch");

  // (row, col) of the violating negative per positive and direction; npos = none.
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> hard_caption(n, npos), hard_image(n, npos);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = s.at(i, i);
    double best_c = 0.0, best_i = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || group[j] == group[i]) continue;
      const double vc = margin + s.at(i, j) - pos;
      if (vc > best_c) best_c = vc, hard_caption[i] = j;
      const double vi = margin + s.at(j, i) - pos;
      if (vi > best_i) best_i = vi, hard_image[i] = j;
    }
    total += best_c + best_i;
  }
  const double inv = 1.0 / static_cast<double>(n);
  return t.record("hard_negative_hinge", scalar_tensor(total * inv), {sims},
                  [sims, hard_caption = std::move(hard_caption), hard_image = std::move(hard_image), inv](
                      Tape& tp, const Tensor& g) {
                    Tensor& gs = tp.grad(sims);
                    const double w = g[0] * inv;
                    for (std::size_t i = 0; i < hard_caption.size(); ++i) {
                      if (hard_caption[i] != npos) {
                        gs.at(i, hard_caption[i]) += w;
                        gs.at(i, i) -= w;
                      }
                      if (hard_image[i] != npos) {
                        gs.at(hard_image[i], i) += w;
                        gs.at(i, i) -= w;
                      }
                    }
                  });
}

Var mean_negative_hinge(Tape& t, Var sims, double margin, std::span<const int> group) {
  const Tensor& s = t.value(sims);
  const std::size_t n = s.rows();
  if (s.cols() != n) throw DimensionError("mean_negative_hinge needs a square matrix, got " + s.shape_string());
  if (n < 2) throw DimensionError("mean_negative_hinge needs a batch of at least 2 (no in-batch negatives)");
  if (group.size() != n) throw DimensionError("mean_negative_hinge: group ids do not match batch");

  // Per positive i: negatives j, and which directions are active.
  Tensor gsim({n, n});
  double total = 0.0;
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t negatives = 0;
    for (std::size_t j = 0; j < n; ++j) negatives += j != i && group[j] != group[i];
    if (negatives == 0) continue;
    const double w = inv / static_cast<double>(negatives);
    const double pos = s.at(i, i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || group[j] == group[i]) continue;
      const double vc = margin + s.at(i, j) - pos;
      if (vc > 0.0) {
        total += w * vc;
        gsim.at(i, j) += w;
        gsim.at(i, i) -= w;
      }
      const double vi = margin + s.at(j, i) - pos;
      if (vi > 0.0) {
        total += w * vi;
        gsim.at(j, i) += w;
        gsim.at(i, i) -= w;
      }
    }
  }
  return t.record("mean_negative_hinge", scalar_tensor(total), {sims},
                  [sims, gsim = std::move(gsim)](Tape& tp, const Tensor& g) {
                    Tensor& gs = tp.grad(sims);
                    for (std::size_t k = 0; k < gsim.size(); ++k) gs[k] += g[0] * gsim[k];
                  });
}

}  // namespace compcap::ad
