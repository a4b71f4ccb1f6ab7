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

#include <span>
#include <variant>

#include "altdiff/backward.hpp"
#include "altdiff/forward.hpp"
#include "altdiff/numerics/factorization.hpp"
#include "altdiff/numerics/matrix.hpp"
#include "altdiff/problem.hpp"

namespace altdiff::layers {

struct QuadraticLayer {
  DenseMatrix P;
  Vector q;
  Polyhedron constraints;
};

// argmin ||x - y||^2 s.t. 1^T x = 1, 0 <= x <= u
struct SparsemaxLayer {
  Vector y;
  Vector u;
};

// argmin -y^T x + sum x_i log x_i s.t. 1^T x = 1, 0 <= x <= u
struct SoftmaxLayer {
  Vector y;
  Vector u;
};

using LayerKind = std::variant<QuadraticLayer, SparsemaxLayer, SoftmaxLayer>;

// sum x_i log x_i with linear term q = -y. Callbacks clip x to >= 1e-12
// before taking logs or reciprocals.
ConvexObjective SoftmaxEntropyObjective(std::span<const double> y);

// Throws Error(kInfeasibleLayer) when u has a nonpositive entry or sums to
// less than one, Error(kDimensionMismatch) when y and u differ in length.
ProblemSpec Build(const LayerKind& kind);

// Matrix of the x-subproblem Hessian in closed form:
//   quadratic  P + rho A^T A + rho G^T G
//   sparsemax  (2 + 2 rho) I + rho 1 1^T
//   softmax    diag(1/x) + 2 rho I + rho 1 1^T
// Throws Error(kDomainError) when a softmax x has a nonpositive entry.
DenseMatrix SpecializedHessian(const LayerKind& kind, std::span<const double> x,
                               double rho);
Factorization SpecializedHessianFactor(const LayerKind& kind,
                                       std::span<const double> x, double rho);

// Hessian strategy routing SpecializedHessianFactor; constant except for
// softmax.
HessianStrategy SpecializedStrategy(const LayerKind& kind, double rho);

// Differentiate(Build(kind), ...) with the specialized Hessian factor.
DiffReport SolveAndDiff(const LayerKind& kind, const ParamSelector& sel,
                        const SolverConfig& cfg);

}  // namespace altdiff::layers
