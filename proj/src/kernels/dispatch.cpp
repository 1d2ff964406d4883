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

#include <atomic>
#include <cstdlib>
#include <string>

#include "compcap/error.hpp"
#include "compcap/kernels.hpp"

namespace compcap::kernels {
namespace {

Isa detect() {
  if (const char* env = std::getenv("COMPCAP_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return Isa::kScalar;
    if (v == "avx2" && supported(Isa::kAvx2)) return Isa::kAvx2;
  }
  return supported(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&table(detect())};
  return slot;
}

std::atomic<Isa>& active_isa_slot() {
  static std::atomic<Isa> slot{detect()};
  return slot;
}

}  // namespace

bool supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(COMPCAP_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
      __builtin_cpu_init();
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (isa == Isa::kAvx2) {
#if defined(COMPCAP_HAVE_AVX2)
    if (const KernelTable* t = detail::avx2_table()) return *t;
#endif
    throw Error("AVX2 kernels not compiled in");
  }
  return detail::scalar_table();
}

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

Isa active_isa() { return active_isa_slot().load(std::memory_order_acquire); }

void force(Isa isa) {
  if (!supported(isa)) throw Error("kernel ISA not supported on this CPU: " + std::string(name(isa)));
  active_slot().store(&table(isa), std::memory_order_release);
  active_isa_slot().store(isa, std::memory_order_release);
}

std::string_view name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

}  // namespace compcap::kernels
