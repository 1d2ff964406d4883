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
#include <string_view>

// Dense fp64 inner loops. Every kernel has a scalar reference and an AVX2+FMA
// variant; the active table is picked once at startup from CPUID and can be
// pinned with COMPCAP_KERNELS=scalar|avx2.
//
// All variants use the same fused-multiply-add sequence per output element,
// so results are bit-identical across ISAs (the equivalence tests rely on it).

namespace compcap::kernels {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  /// c[m x n] += a[m x k] * b[k x n]; per element the k-sum runs in order.
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  /// c[m x n] += a^T * b with a[k x m], b[k x n]; k-sum in order.
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  /// Four strided partial sums (lane l takes indices = l mod 4), combined as
  /// (s0 + s1) + (s2 + s3), then the tail is folded in order.
  double (*dot)(std::size_t n, const double* x, const double* y);
  /// y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
};

bool supported(Isa isa);
const KernelTable& table(Isa isa);

/// The dispatched table. Thread-safe after first call.
const KernelTable& active();
Isa active_isa();

/// Overrides dispatch (tests, benchmarks). Throws if the ISA is unsupported.
void force(Isa isa);

std::string_view name(Isa isa);

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
}  // namespace detail

}  // namespace compcap::kernels
