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

// Compiled with -mavx2 -mfma. Only reached after a CPUID check.

#include <immintrin.h>

#include <cmath>

#include "compcap/kernels.hpp"

namespace compcap::kernels::detail {
namespace {

// One output row, columns [j0, j0 + 16): four ymm accumulators held across the
// whole k loop.
inline void row_block16(std::size_t k, const double* arow, std::size_t astride,
                        const double* b, std::size_t n, double* crow, std::size_t j0) {
  __m256d c0 = _mm256_loadu_pd(crow + j0);
  __m256d c1 = _mm256_loadu_pd(crow + j0 + 4);
  __m256d c2 = _mm256_loadu_pd(crow + j0 + 8);
  __m256d c3 = _mm256_loadu_pd(crow + j0 + 12);
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d av = _mm256_broadcast_sd(arow + p * astride);
    const double* brow = b + p * n + j0;
    c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow), c0);
    c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4), c1);
    c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 8), c2);
    c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 12), c3);
  }
  _mm256_storeu_pd(crow + j0, c0);
  _mm256_storeu_pd(crow + j0 + 4, c1);
  _mm256_storeu_pd(crow + j0 + 8, c2);
  _mm256_storeu_pd(crow + j0 + 12, c3);
}

inline void row_block4(std::size_t k, const double* arow, std::size_t astride,
                       const double* b, std::size_t n, double* crow, std::size_t j0) {
  __m256d c0 = _mm256_loadu_pd(crow + j0);
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d av = _mm256_broadcast_sd(arow + p * astride);
    c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b + p * n + j0), c0);
  }
  _mm256_storeu_pd(crow + j0, c0);
}

// Generic row driver: a element for (row, p) lives at arow[p * astride].
inline void row_product(std::size_t n, std::size_t k, const double* arow,
                        std::size_t astride, const double* b, double* crow) {
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) row_block16(k, arow, astride, b, n, crow, j);
  for (; j + 4 <= n; j += 4) row_block4(k, arow, astride, b, n, crow, j);
  for (; j < n; ++j) {
    double acc = crow[j];
    for (std::size_t p = 0; p < k; ++p) acc = std::fma(arow[p * astride], b[p * n + j], acc);
    crow[j] = acc;
  }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) row_product(n, k, a + i * k, 1, b, c + i * n);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) row_product(n, k, a + i, m, b, c + i * n);
}

double dot(std::size_t n, const double* x, const double* y) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t full = n - n % 4;
  for (std::size_t p = 0; p < full; p += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + p), _mm256_loadu_pd(y + p), acc);
  }
  alignas(32) double s[4];
  _mm256_store_pd(s, acc);
  double total = (s[0] + s[1]) + (s[2] + s[3]);
  for (std::size_t p = full; p < n; ++p) total = std::fma(x[p], y[p], total);
  return total;
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable t{&gemm_nn, &gemm_tn, &dot, &axpy};
  return &t;
}

}  // namespace compcap::kernels::detail
