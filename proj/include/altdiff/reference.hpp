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

#include "altdiff/forward.hpp"
#include "altdiff/numerics/matrix.hpp"
#include "altdiff/problem.hpp"

// Ground-truth oracles: KKT residuals, implicit differentiation of the full
// KKT system, and central finite differences of the forward solver.
namespace altdiff::reference {

// [grad f + A^T lambda + G^T nu ; A x - b ; diag(nu)(G x - h)]
Vector KktResidual(const ProblemSpec& p, std::span<const double> x,
                   std::span<const double> lambda, std::span<const double> nu);

// Linearized KKT system at a primal-dual point: `J_tilde` is the Jacobian of
// the residual above in (x, lambda, nu), `rhs` its derivative in theta.
struct KktSystem {
  DenseMatrix J_tilde;
  DenseMatrix rhs;
};

KktSystem AssembleKkt(const ProblemSpec& p, std::span<const double> x,
                      std::span<const double> lambda, std::span<const double> nu,
                      const ParamSelector& sel);

// dx*/dtheta = x-block of -J_tilde^{-1} rhs. Throws Error(kKktNotSatisfied)
// when the point is not optimal to 1e-6 (1 + ||x||), Error(kSingularKkt)
// when strict complementarity fails or J_tilde is singular.
DenseMatrix ImplicitDiffSolve(const ProblemSpec& p, std::span<const double> x,
                              std::span<const double> lambda,
                              std::span<const double> nu, const ParamSelector& sel);

struct KktPoint {
  Vector x;
  Vector lambda;
  Vector nu;
  bool polished = false;
};

// High-accuracy primal-dual solution: a tight splitting solve to identify
// the active set, then Newton on the equality-constrained KKT system of that
// active set. Falls back to the unpolished iterate when the active-set
// solution is not primal-dual feasible.
KktPoint SolveKkt(const ProblemSpec& p, const SolverConfig& cfg = {});

// Central differences (x*(theta + step e_j) - x*(theta - step e_j)) / 2 step,
// each solve run by the forward module at eps = 1e-8.
DenseMatrix FiniteDiffJacobian(const ProblemSpec& p, const ParamSelector& sel,
                               const SolverConfig& cfg, double step = 1e-5);

}  // namespace altdiff::reference
