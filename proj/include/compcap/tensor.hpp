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
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace compcap {

/// Dense row-major fp64 array of rank 1 or 2.
///
/// Rank-1 tensors behave as a single row (1 x n) wherever a matrix is expected.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  /// Same data, new shape; sizes must agree.
  Tensor reshaped(std::vector<std::size_t> shape) const;
  void fill(double v);
  bool all_finite() const;

  std::string shape_string() const;
  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

/// Throws NumericError naming `where` if any value is NaN/Inf.
void require_finite(const Tensor& t, const char* where);

// Value-level primitives. The autodiff ops in autodiff.hpp are built on these.

enum class Activation { kTanh, kSigmoid };

/// Standard matrix product; rank-1 operands are treated as rows.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Row-wise softmax with max subtraction. A rank-1 input yields a rank-1 output.
Tensor softmax(const Tensor& x);
Tensor activate(const Tensor& x, Activation kind);
double sigmoid(double x);
double cosine_similarity(std::span<const double> u, std::span<const double> v);
double l2_norm(std::span<const double> x);

inline constexpr double kProbabilityFloor = 1e-12;

/// -log(max(p[target], floor)).
double cross_entropy_step(std::span<const double> probs, std::size_t target,
                          double floor = kProbabilityFloor);

}  // namespace compcap
