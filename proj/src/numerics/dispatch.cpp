// Copyright 2026 The altdiff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "altdiff/numerics/kernels.hpp"

namespace altdiff::kernels {
namespace {

const KernelTable* Detect() {
  const char* env = std::getenv("ALTDIFF_SIMD");
  if (env != nullptr && std::string_view(env) == "scalar") return &Scalar();
  if (const KernelTable* avx2 = Avx2()) return avx2;
  return &Scalar();
}

std::atomic<const KernelTable*>& Slot() {
  static std::atomic<const KernelTable*> slot{Detect()};
  return slot;
}

}  // namespace

const KernelTable& Active() { return *Slot().load(std::memory_order_acquire); }

void SetActive(const KernelTable& table) {
  Slot().store(&table, std::memory_order_release);
}

}  // namespace altdiff::kernels
