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

#include "altdiff/numerics/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>

#include "altdiff/error.hpp"
#include "altdiff/numerics/kernels.hpp"
#include "altdiff/numerics/linalg.hpp"

namespace altdiff {
namespace {

constexpr double kPivotTolerance = 1e-12;

thread_local std::uint64_t factorization_count = 0;

double MaxRowNorm(const DenseMatrix& m) {
  double best = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) best = std::max(best, Norm2(m.row(i)));
  return best;
}

// Returns L, or nullopt when a Schur-complement pivot is not safely positive.
// Column sweep: the updates of all rows below pivot j are one gemv.
std::optional<DenseMatrix> TryCholesky(const DenseMatrix& m, double threshold) {
  const auto& k = kernels::Active();
  const std::size_t n = m.rows();
  DenseMatrix l(n, n);
  Vector dots(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double* lj = l.row(j).data();
    const double pivot = m(j, j) - k.dot(lj, lj, j);
    if (!(pivot > threshold)) return std::nullopt;
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    if (j + 1 == n) break;
    k.gemv(l.data() + (j + 1) * n, n, n - j - 1, lj, j, dots.data());
    for (std::size_t i = j + 1; i < n; ++i) l(i, j) = (m(i, j) - dots[i - j - 1]) / ljj;
  }
  return l;
}

}  // namespace

Factorization Factorize(const DenseMatrix& m, bool spd_hint) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "factorize needs a square matrix, got " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (!AllFinite(m.entries())) {
    throw Error(ErrorCode::kNonFinite, "factorize: non-finite entry");
  }
  ++factorization_count;
  const std::size_t n = m.rows();
  const double threshold = kPivotTolerance * MaxRowNorm(m);

  Factorization f;
  f.dim_ = n;
  if (spd_hint) {
    if (auto l = TryCholesky(m, threshold)) {
      f.kind_ = Factorization::Kind::kCholesky;
      f.upper_ = Transpose(*l);
      f.lower_ = std::move(*l);
      return f;
    }
  }

  const auto& k = kernels::Active();
  DenseMatrix lu = m;
  f.perm_.resize(n);
  std::iota(f.perm_.begin(), f.perm_.end(), std::size_t{0});
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(lu(r, c)) > std::abs(lu(piv, c))) piv = r;
    }
    if (!(std::abs(lu(piv, c)) > threshold)) {
      throw Error(ErrorCode::kSingularMatrix,
                  "pivot " + std::to_string(std::abs(lu(piv, c))) +
                      " below threshold at column " + std::to_string(c));
    }
    if (piv != c) {
      std::swap_ranges(lu.row(c).begin(), lu.row(c).end(), lu.row(piv).begin());
      std::swap(f.perm_[c], f.perm_[piv]);
    }
    const double inv = 1.0 / lu(c, c);
    const double* pivot_row = lu.row(c).data() + c + 1;
    for (std::size_t r = c + 1; r < n; ++r) {
      const double factor = lu(r, c) * inv;
      lu(r, c) = factor;
      if (factor != 0.0) k.axpy(-factor, pivot_row, lu.row(r).data() + c + 1, n - c - 1);
    }
  }
  f.kind_ = Factorization::Kind::kPivotedLu;
  f.lower_ = DenseMatrix(n, n);
  f.upper_ = DenseMatrix(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      if (c < r) {
        f.lower_(r, c) = lu(r, c);
      } else {
        f.upper_(r, c) = lu(r, c);
      }
    }
    f.lower_(r, r) = 1.0;
  }
  return f;
}

void Factorization::SolveInPlace(std::span<double> b) const {
  RequireSameSize(b.size(), dim_, "solve right-hand side");
  const auto& k = kernels::Active();
  const std::size_t n = dim_;
  if (kind_ == Kind::kPivotedLu) {
    Vector permuted(n);
    for (std::size_t i = 0; i < n; ++i) permuted[i] = b[perm_[i]];
    std::copy(permuted.begin(), permuted.end(), b.begin());
  }
  const bool unit_lower = kind_ == Kind::kPivotedLu;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = b[i] - k.dot(lower_.row(i).data(), b.data(), i);
    b[i] = unit_lower ? s : s / lower_(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    const double* ui = upper_.row(i).data();
    const double s = b[i] - k.dot(ui + i + 1, b.data() + i + 1, n - i - 1);
    b[i] = s / ui[i];
  }
}

DenseMatrix Solve(const Factorization& f, const DenseMatrix& b) {
  RequireSameSize(b.rows(), f.dim(), "solve row count");
  DenseMatrix cols = Transpose(b);
  for (std::size_t c = 0; c < cols.rows(); ++c) f.SolveInPlace(cols.row(c));
  return Transpose(cols);
}

Vector Solve(const Factorization& f, std::span<const double> b) {
  Vector x(b.begin(), b.end());
  f.SolveInPlace(x);
  return x;
}

std::uint64_t FactorizationCount() noexcept { return factorization_count; }

}  // namespace altdiff
