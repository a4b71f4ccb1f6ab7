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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>

#include "altdiff/numerics/matrix.hpp"
#include "altdiff/problem.hpp"
#include "doctest.h"

namespace altdiff::testing {

inline QuadraticObjective Quad(DenseMatrix P, Vector q) { return {std::move(P), std::move(q)}; }

inline ProblemSpec MakeQp(DenseMatrix P, Vector q, DenseMatrix A, Vector b, DenseMatrix G,
                          Vector h) {
  ProblemSpec p;
  p.n = P.rows();
  if (A.rows() == 0) A = DenseMatrix(0, p.n);
  if (G.rows() == 0) G = DenseMatrix(0, p.n);
  p.objective = Quad(std::move(P), std::move(q));
  p.constraints = {std::move(A), std::move(b), std::move(G), std::move(h)};
  return p;
}

// min 1/2 x^2
inline ProblemSpec Unconstrained1d() { return MakeQp({{1.0}}, {0.0}, {}, {}, {}, {}); }

// min 1/2 x^2 s.t. x <= 10
inline ProblemSpec InactiveToy() { return MakeQp({{1.0}}, {0.0}, {}, {}, {{1.0}}, {10.0}); }

// min 1/2 x^2 s.t. x >= 1
inline ProblemSpec ActiveToy() { return MakeQp({{1.0}}, {0.0}, {}, {}, {{-1.0}}, {-1.0}); }

// min 1/2 x^2 s.t. x = b
inline ProblemSpec EqualityToy(double b) { return MakeQp({{1.0}}, {0.0}, {{1.0}}, {b}, {}, {}); }

// min 1/2 ||x||^2 s.t. x1 + x2 = b
inline ProblemSpec SimplexToy(double b) {
  return MakeQp(DenseMatrix::Identity(2), {0.0, 0.0}, {{1.0, 1.0}}, {b}, {}, {});
}

inline DenseMatrix RandomMatrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = nd(rng);
  }
  return m;
}

inline Vector RandomVector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Vector v(n);
  for (double& x : v) x = nd(rng);
  return v;
}

inline double MaxAbsDiff(const DenseMatrix& a, const DenseMatrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.entries()[i] - b.entries()[i]));
  }
  return m;
}

}  // namespace altdiff::testing
