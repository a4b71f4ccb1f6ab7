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
#include <cstdint>
#include <span>
#include <vector>

#include "altdiff/numerics/matrix.hpp"

namespace altdiff {

// Dense factorization of a square matrix, reusable for any number of
// right-hand sides. Holds both triangular factors row-major so that forward
// and backward substitution each walk contiguous rows.
class Factorization {
 public:
  enum class Kind { kCholesky, kPivotedLu };

  Factorization() = default;

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  bool valid() const noexcept { return dim_ > 0; }

  // Solves M x = b in place.
  void SolveInPlace(std::span<double> b) const;

 private:
  friend Factorization Factorize(const DenseMatrix& m, bool spd_hint);

  Kind kind_ = Kind::kCholesky;
  std::size_t dim_ = 0;
  // Cholesky: lower_ = L, upper_ = L^T.
  // LU: lower_ holds the unit-diagonal L (diagonal unused), upper_ holds U.
  DenseMatrix lower_;
  DenseMatrix upper_;
  std::vector<std::size_t> perm_;
};

// Cholesky when `spd_hint` is set and the matrix admits it, pivoted LU
// otherwise. Throws Error(kSingularMatrix) when a pivot falls below
// 1e-12 times the largest row norm.
Factorization Factorize(const DenseMatrix& m, bool spd_hint);

// Returns X with M X = B, column by column.
DenseMatrix Solve(const Factorization& f, const DenseMatrix& b);
Vector Solve(const Factorization& f, std::span<const double> b);

// Number of Factorize calls made on the calling thread since start-up.
std::uint64_t FactorizationCount() noexcept;

}  // namespace altdiff
