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

#pragma once

#include <cstddef>
#include <string_view>

namespace altdiff::kernels {

// Innermost double-precision loops. Every higher-level routine in the
// numerics module goes through one of these tables so that the scalar
// reference and the vector variants can be swapped and compared.
struct KernelTable {
  std::string_view name;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = alpha * x + beta * y
  void (*axpby)(double alpha, const double* x, double beta, double* y,
                std::size_t n);
  // sum_i (x[i] - y[i])^2
  double (*sq_dist)(const double* x, const double* y, std::size_t n);
  // y[r] = sum_c a[r * lda + c] * x[c] for r < rows, c < n
  void (*gemv)(const double* a, std::size_t lda, std::size_t rows, const double* x,
               std::size_t n, double* y);
};

const KernelTable& Scalar();

// Null when the binary was built without AVX2 support or the CPU lacks
// AVX2+FMA.
const KernelTable* Avx2();

// The table every library routine uses. Chosen once on first use: AVX2 when
// available unless the ALTDIFF_SIMD environment variable is "scalar".
const KernelTable& Active();

// Overrides the active table for the rest of the process (tests and
// benchmarks). Not thread-safe with respect to concurrent numeric work.
void SetActive(const KernelTable& table);

}  // namespace altdiff::kernels
