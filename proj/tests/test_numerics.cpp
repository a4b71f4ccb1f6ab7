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


#include <cmath>
#include <limits>
#include <vector>

#include "altdiff/error.hpp"
#include "altdiff/numerics/factorization.hpp"
#include "altdiff/numerics/kernels.hpp"
#include "altdiff/numerics/linalg.hpp"
#include "altdiff/numerics/matrix.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace altdiff;
using altdiff::testing::RandomMatrix;
using altdiff::testing::RandomVector;

namespace {

// 2x2 Cramer's rule
Vector Cramer(const DenseMatrix& m, const Vector& b) {
  const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  return {(b[0] * m(1, 1) - m(0, 1) * b[1]) / det, (m(0, 0) * b[1] - b[0] * m(1, 0)) / det};
}

DenseMatrix WellConditioned(std::size_t n, std::uint64_t seed) {
  const DenseMatrix r = RandomMatrix(n, n, seed);
  DenseMatrix m = Gram(r);
  for (std::size_t i = 0; i < n; ++i) m(i, i) += static_cast<double>(n);
  return m;
}

double NaiveDot(const Vector& x, const Vector& y) {
  long double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<long double>(x[i]) * y[i];
  return static_cast<double>(s);
}

}  // namespace

TEST_CASE("matrix construction rejects non-finite entries and bad shapes") {
  CHECK_THROWS_AS(DenseMatrix(1, 2, {1.0}), Error);
  CHECK_THROWS_AS(DenseMatrix(1, 1, {std::numeric_limits<double>::quiet_NaN()}), Error);
  CHECK_THROWS_AS((DenseMatrix{{1.0, 2.0}, {3.0}}), Error);
  const DenseMatrix m{{1.0, 2.0}, {3.0, 4.0}};
  CHECK(m.rows() == 2);
  CHECK(m(1, 0) == 3.0);
  CHECK(m.col(1) == Vector{2.0, 4.0});
}

TEST_CASE("factorize identity solves to b") {
  const Factorization f = Factorize(DenseMatrix::Identity(2), true);
  CHECK(f.kind() == Factorization::Kind::kCholesky);
  CHECK(Solve(f, Vector{3.0, 4.0}) == Vector{3.0, 4.0});
}

TEST_CASE("factorize diagonal") {
  const Vector d{2.0, 4.0};
  const Vector x = Solve(Factorize(DenseMatrix::Diagonal(d), true), Vector{2.0, 4.0});
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("factorize 2x2 against Cramer's rule") {
  const DenseMatrix m{{4.0, 1.0}, {1.0, 3.0}};
  const Vector b{1.0, 2.0};
  const Vector want = Cramer(m, b);
  for (bool spd : {true, false}) {
    const Vector x = Solve(Factorize(m, spd), b);
    CHECK(x[0] == doctest::Approx(want[0]).epsilon(1e-14));
    CHECK(x[1] == doctest::Approx(want[1]).epsilon(1e-14));
  }
}

TEST_CASE("matrix solve: identity, diagonal, and the Cramer case") {
  CHECK(Solve(Factorize(DenseMatrix::Identity(3), true), DenseMatrix::Identity(3)) ==
        DenseMatrix::Identity(3));
  const DenseMatrix x =
      Solve(Factorize(DenseMatrix::Diagonal(Vector{2.0, 2.0}), true), DenseMatrix{{2.0}, {4.0}});
  CHECK(x(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(x(1, 0) == doctest::Approx(2.0).epsilon(1e-15));
  const DenseMatrix m{{4.0, 1.0}, {1.0, 3.0}};
  const Vector want = Cramer(m, {1.0, 2.0});
  const DenseMatrix y = Solve(Factorize(m, true), DenseMatrix{{1.0}, {2.0}});
  CHECK(y(0, 0) == doctest::Approx(want[0]).epsilon(1e-14));
  CHECK(y(1, 0) == doctest::Approx(want[1]).epsilon(1e-14));
  CHECK_THROWS_AS(Solve(Factorize(m, true), DenseMatrix(3, 1)), Error);
}

TEST_CASE("indefinite matrices fall back to pivoted LU") {
  const DenseMatrix m{{0.0, 1.0}, {1.0, 0.0}};
  const Factorization f = Factorize(m, true);
  CHECK(f.kind() == Factorization::Kind::kPivotedLu);
  const Vector x = Solve(f, Vector{2.0, 5.0});
  CHECK(x[0] == doctest::Approx(5.0));
  CHECK(x[1] == doctest::Approx(2.0));
}

TEST_CASE("singular matrix is reported") {
  try {
    (void)Factorize(DenseMatrix{{1.0, 2.0}, {2.0, 4.0}}, true);
    FAIL("expected SingularMatrix");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSingularMatrix);
  }
  CHECK_THROWS_AS(Factorize(DenseMatrix(2, 3), false), Error);
}

TEST_CASE("relative step norm") {
  CHECK(RelativeStepNorm(Vector{1.0, 1.0}, Vector{1.0, 1.0}) == 0.0);
  CHECK(RelativeStepNorm(Vector{2.0, 0.0}, Vector{1.0, 0.0}) == 1.0);
  CHECK(RelativeStepNorm(Vector{1.0, 0.0}, Vector{0.0, 0.0}) == doctest::Approx(1e12));
  CHECK_THROWS_AS(RelativeStepNorm(Vector{1.0}, Vector{1.0, 2.0}), Error);
}

TEST_CASE("matmul, matvec and transpose against index loops") {
  const DenseMatrix a = RandomMatrix(5, 7, 1);
  const DenseMatrix b = RandomMatrix(7, 3, 2);
  const DenseMatrix c = Matmul(a, b);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 7; ++k) s += a(i, k) * b(k, j);
      CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-13));
    }
  }
  const DenseMatrix at = Transpose(a);
  CHECK(MatmulTn(at, b) == Matmul(a, b));
  CHECK(testing::MaxAbsDiff(Gram(a), Matmul(at, a)) < 1e-12);
  const Vector x = RandomVector(7, 3);
  const Vector y = Matvec(a, x);
  const Vector yt = MatvecT(at, x);
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < 7; ++k) s += a(i, k) * x[k];
    CHECK(y[i] == doctest::Approx(s).epsilon(1e-13));
    CHECK(yt[i] == doctest::Approx(s).epsilon(1e-13));
  }
  CHECK_THROWS_AS(Matmul(a, a), Error);
  CHECK_THROWS_AS(Matvec(a, Vector(3)), Error);
}

TEST_CASE("frobenius norm and cosine similarity") {
  CHECK(FrobeniusNorm(DenseMatrix{{3.0, 0.0}, {0.0, 4.0}}) == 5.0);
  CHECK(CosineSimilarity(Vector{1.0, 0.0}, Vector{2.0, 0.0}) == doctest::Approx(1.0));
  CHECK(CosineSimilarity(Vector{1.0, 0.0}, Vector{0.0, 3.0}) == 0.0);
  CHECK(CosineSimilarity(Vector{1.0, 1.0}, Vector{-1.0, -1.0}) == doctest::Approx(-1.0));
  CHECK(CosineSimilarity(Vector{0.0, 0.0}, Vector{1.0, 1.0}) == 0.0);
}

TEST_CASE("property: transpose is an involution") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DenseMatrix m = RandomMatrix(1 + seed % 4, 2 + seed % 5, seed);
    CHECK(Transpose(Transpose(m)) == m);
  }
}

TEST_CASE("property: solve residual on well-conditioned systems") {
  for (std::size_t n : {1u, 3u, 8u, 17u, 40u}) {
    const DenseMatrix m = WellConditioned(n, n);
    const Vector b = RandomVector(n, n + 100);
    for (bool spd : {true, false}) {
      const Vector x = Solve(Factorize(m, spd), b);
      const Vector r = Subtract(Matvec(m, x), b);
      CHECK(Norm2(r) / Norm2(b) <= 1e-8);
    }
    // unsymmetric, diagonally dominant
    DenseMatrix u = RandomMatrix(n, n, n + 7);
    for (std::size_t i = 0; i < n; ++i) u(i, i) += 3.0 * static_cast<double>(n);
    const Vector x = Solve(Factorize(u, false), b);
    CHECK(Norm2(Subtract(Matvec(u, x), b)) / Norm2(b) <= 1e-8);
  }
}

TEST_CASE("property: factorization recovers X from M X") {
  const DenseMatrix m = WellConditioned(12, 5);
  const DenseMatrix x = RandomMatrix(12, 4, 6);
  const DenseMatrix got = Solve(Factorize(m, true), Matmul(m, x));
  CHECK(FrobeniusDistance(got, x) / FrobeniusNorm(x) <= 1e-10);
}

TEST_CASE("property: factorize is deterministic") {
  const DenseMatrix m = WellConditioned(20, 9);
  const Vector b = RandomVector(20, 10);
  CHECK(Solve(Factorize(m, true), b) == Solve(Factorize(m, true), b));
  CHECK(Solve(Factorize(m, false), b) == Solve(Factorize(m, false), b));
}

TEST_CASE("factorization counter advances once per call") {
  const std::uint64_t before = FactorizationCount();
  (void)Factorize(DenseMatrix::Identity(3), true);
  (void)Factorize(DenseMatrix::Identity(3), false);
  CHECK(FactorizationCount() - before == 2);
}

TEST_CASE("scalar kernels against long-double loops") {
  const kernels::KernelTable& k = kernels::Scalar();
  const Vector x = RandomVector(13, 1);
  Vector y = RandomVector(13, 2);
  CHECK(k.dot(x.data(), y.data(), 13) == doctest::Approx(NaiveDot(x, y)).epsilon(1e-14));
  Vector d(13);
  for (std::size_t i = 0; i < 13; ++i) d[i] = x[i] - y[i];
  CHECK(k.sq_dist(x.data(), y.data(), 13) == doctest::Approx(NaiveDot(d, d)).epsilon(1e-14));
  Vector z = y;
  k.axpy(2.0, x.data(), z.data(), 13);
  for (std::size_t i = 0; i < 13; ++i) CHECK(z[i] == doctest::Approx(y[i] + 2.0 * x[i]));
  z = y;
  k.axpby(2.0, x.data(), -0.5, z.data(), 13);
  for (std::size_t i = 0; i < 13; ++i) CHECK(z[i] == doctest::Approx(2.0 * x[i] - 0.5 * y[i]));
}

TEST_CASE("vector kernels match the scalar reference") {
  const kernels::KernelTable* v = kernels::Avx2();
  if (v == nullptr) {
    MESSAGE("AVX2 unavailable on this machine; equivalence not exercised");
    return;
  }
  const kernels::KernelTable& s = kernels::Scalar();
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 33u, 100u, 257u}) {
    CAPTURE(n);
    const Vector x = RandomVector(n, n);
    const Vector y = RandomVector(n, n + 1);
    const double scale = 1.0 + std::sqrt(NaiveDot(x, x) * NaiveDot(y, y));
    CHECK(std::abs(v->dot(x.data(), y.data(), n) - s.dot(x.data(), y.data(), n)) <=
          1e-13 * scale);
    CHECK(std::abs(v->sq_dist(x.data(), y.data(), n) - s.sq_dist(x.data(), y.data(), n)) <=
          1e-13 * (1.0 + NaiveDot(x, x) + NaiveDot(y, y)));
    Vector a = y, b = y;
    v->axpy(0.75, x.data(), a.data(), n);
    s.axpy(0.75, x.data(), b.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-15));
    a = y;
    b = y;
    v->axpby(-1.5, x.data(), 0.25, a.data(), n);
    s.axpby(-1.5, x.data(), 0.25, b.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-15));
  }
  for (std::size_t rows : {1u, 2u, 3u, 4u, 5u, 9u}) {
    for (std::size_t n : {0u, 1u, 4u, 6u, 13u, 64u}) {
      CAPTURE(rows);
      CAPTURE(n);
      const std::size_t lda = n + 3;
      const DenseMatrix a = RandomMatrix(rows, lda, rows * 100 + n);
      const Vector x = RandomVector(n, n + 5);
      Vector ya(rows, -7.0), yb(rows, 9.0);
      v->gemv(a.data(), lda, rows, x.data(), n, ya.data());
      s.gemv(a.data(), lda, rows, x.data(), n, yb.data());
      for (std::size_t r = 0; r < rows; ++r) {
        CHECK(std::abs(ya[r] - yb[r]) <= 1e-13 * (1.0 + std::sqrt(NaiveDot(x, x)) * 10.0));
      }
    }
  }
}

TEST_CASE("factorizations agree across kernel tables") {
  const kernels::KernelTable* v = kernels::Avx2();
  if (v == nullptr) return;
  const kernels::KernelTable& saved = kernels::Active();
  const DenseMatrix m = WellConditioned(37, 3);
  const Vector b = RandomVector(37, 4);
  kernels::SetActive(kernels::Scalar());
  const Vector xs = Solve(Factorize(m, true), b);
  const Vector ls = Solve(Factorize(m, false), b);
  kernels::SetActive(*v);
  const Vector xv = Solve(Factorize(m, true), b);
  const Vector lv = Solve(Factorize(m, false), b);
  kernels::SetActive(saved);
  CHECK(Distance2(xs, xv) <= 1e-12 * Norm2(xs));
  CHECK(Distance2(ls, lv) <= 1e-12 * Norm2(ls));
}
