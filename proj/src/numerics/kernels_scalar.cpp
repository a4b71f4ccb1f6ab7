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

#include "altdiff/numerics/kernels.hpp"

namespace altdiff::kernels {
namespace {

double DotScalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void AxpyScalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void AxpbyScalar(double alpha, const double* x, double beta, double* y,
                 std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = alpha * x[i] + beta * y[i];
}

double SqDistScalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

void GemvScalar(const double* a, std::size_t lda, std::size_t rows, const double* x,
                std::size_t n, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = DotScalar(a + r * lda, x, n);
}

}  // namespace

const KernelTable& Scalar() {
  static const KernelTable table{"scalar", &DotScalar, &AxpyScalar,
                                 &AxpbyScalar, &SqDistScalar, &GemvScalar};
  return table;
}

}  // namespace altdiff::kernels
