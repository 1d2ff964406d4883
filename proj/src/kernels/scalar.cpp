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

#include "compcap/kernels.hpp"

namespace compcap::kernels::detail {
namespace {

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      double acc = crow[j];
      for (std::size_t p = 0; p < k; ++p) acc = std::fma(a[i * k + p], b[p * n + j], acc);
      crow[j] = acc;
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      double acc = crow[j];
      for (std::size_t p = 0; p < k; ++p) acc = std::fma(a[p * m + i], b[p * n + j], acc);
      crow[j] = acc;
    }
  }
}

double dot(std::size_t n, const double* x, const double* y) {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t full = n - n % 4;
  for (std::size_t p = 0; p < full; p += 4) {
    for (std::size_t l = 0; l < 4; ++l) s[l] = std::fma(x[p + l], y[p + l], s[l]);
  }
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (std::size_t p = full; p < n; ++p) total = std::fma(x[p], y[p], total);
  return total;
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{&gemm_nn, &gemm_tn, &dot, &axpy};
  return t;
}

}  // namespace compcap::kernels::detail
