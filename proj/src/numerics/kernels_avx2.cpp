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

// AVX2/FMA variants. The translation unit is compiled with the baseline ISA;
// only the functions below carry the target attribute, so no inline header
// code is ever emitted with AVX2 instructions.

#include "altdiff/numerics/kernels.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define ALTDIFF_HAVE_AVX2 1
#include <immintrin.h>
#else
#define ALTDIFF_HAVE_AVX2 0
#endif

namespace altdiff::kernels {

#if ALTDIFF_HAVE_AVX2
namespace {

#define ALTDIFF_AVX2 __attribute__((target("avx2,fma")))

ALTDIFF_AVX2 inline double HorizontalSum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

ALTDIFF_AVX2 double DotAvx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double acc = HorizontalSum(_mm256_add_pd(_mm256_add_pd(acc0, acc1),
                                           _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

ALTDIFF_AVX2 void AxpyAvx2(double alpha, const double* x, double* y,
                           std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i + 4),
                                                _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

ALTDIFF_AVX2 void AxpbyAvx2(double alpha, const double* x, double beta,
                            double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  const __m256d b = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d by = _mm256_mul_pd(b, _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), by));
  }
  for (; i < n; ++i) y[i] = alpha * x[i] + beta * y[i];
}

ALTDIFF_AVX2 double SqDistAvx2(const double* x, const double* y,
                               std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    const __m256d d1 =
        _mm256_sub_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
  }
  double acc = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

// Four rows per pass share each load of x.
ALTDIFF_AVX2 void GemvAvx2(const double* a, std::size_t lda, std::size_t rows,
                           const double* x, std::size_t n, double* y) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* a0 = a + r * lda;
    const double* a1 = a0 + lda;
    const double* a2 = a1 + lda;
    const double* a3 = a2 + lda;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= n; c += 4) {
      const __m256d xv = _mm256_loadu_pd(x + c);
      acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a0 + c), xv, acc0);
      acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a1 + c), xv, acc1);
      acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a2 + c), xv, acc2);
      acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a3 + c), xv, acc3);
    }
    double s0 = HorizontalSum(acc0);
    double s1 = HorizontalSum(acc1);
    double s2 = HorizontalSum(acc2);
    double s3 = HorizontalSum(acc3);
    for (; c < n; ++c) {
      s0 += a0[c] * x[c];
      s1 += a1[c] * x[c];
      s2 += a2[c] * x[c];
      s3 += a3[c] * x[c];
    }
    y[r] = s0;
    y[r + 1] = s1;
    y[r + 2] = s2;
    y[r + 3] = s3;
  }
  for (; r < rows; ++r) y[r] = DotAvx2(a + r * lda, x, n);
}

#undef ALTDIFF_AVX2

}  // namespace

const KernelTable* Avx2() {
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  static const KernelTable table{"avx2",      &DotAvx2,    &AxpyAvx2,
                                 &AxpbyAvx2,  &SqDistAvx2, &GemvAvx2};
  return supported ? &table : nullptr;
}

#else

const KernelTable* Avx2() { return nullptr; }

#endif

}  // namespace altdiff::kernels
