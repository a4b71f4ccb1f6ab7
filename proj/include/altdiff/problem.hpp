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
#include <functional>
#include <span>
#include <string>
#include <variant>

#include "altdiff/numerics/matrix.hpp"

namespace altdiff {

// Feasible set {x | A x = b, G x <= h}. Either block may have zero rows; a
// zero-row block still records the column count n.
struct Polyhedron {
  DenseMatrix A;
  Vector b;
  DenseMatrix G;
  Vector h;

  std::size_t eq_count() const noexcept { return b.size(); }
  std::size_t ineq_count() const noexcept { return h.size(); }
};

// f(x) = 1/2 x^T P x + q^T x, P symmetric positive semidefinite.
struct QuadraticObjective {
  DenseMatrix P;
  Vector q;
};

// f(x) = value(x) + q^T x with user callbacks for the nonlinear part. The
// linear term is kept separate so the cost vector can be a differentiation
// parameter for any objective.
struct ConvexObjective {
  std::string name;
  std::function<double(std::span<const double>)> value;
  std::function<Vector(std::span<const double>)> gradient;
  std::function<DenseMatrix(std::span<const double>)> hessian;
  // Optional open-domain test; Newton line searches never leave the domain.
  std::function<bool(std::span<const double>)> in_domain;
  Vector q;
};

using Objective = std::variant<QuadraticObjective, ConvexObjective>;

struct ProblemSpec {
  std::size_t n = 0;
  Objective objective;
  Polyhedron constraints;

  bool is_quadratic() const noexcept {
    return std::holds_alternative<QuadraticObjective>(objective);
  }
  const QuadraticObjective& quadratic() const {
    return std::get<QuadraticObjective>(objective);
  }
  const ConvexObjective& convex() const { return std::get<ConvexObjective>(objective); }
  const Vector& linear_cost() const;
  Vector& linear_cost();

  std::size_t eq_count() const noexcept { return constraints.eq_count(); }
  std::size_t ineq_count() const noexcept { return constraints.ineq_count(); }

  double ObjectiveValue(std::span<const double> x) const;
  Vector ObjectiveGradient(std::span<const double> x) const;
  DenseMatrix ObjectiveHessian(std::span<const double> x) const;
};

// What theta ranges over when differentiating x*(theta).
struct LinearCost {};
struct EqRhs {};
struct IneqRhs {};
// A scalar theta moving every block along the given direction. Empty blocks
// are treated as zero.
struct Direction {
  DenseMatrix dP;
  Vector dq;
  DenseMatrix dA;
  Vector db;
  DenseMatrix dG;
  Vector dh;
};

using ParamSelector = std::variant<LinearCost, EqRhs, IneqRhs, Direction>;

std::string SelectorName(const ParamSelector& sel);

// Cheap shape cross-checks only. Throws Error(kDimensionMismatch).
void CheckDimensions(const ProblemSpec& p);

// Full validation: dimensions, symmetry and PSD-ness of P (n <= 500), and a
// finite-difference check of callback gradients. Throws Error with
// kDimensionMismatch, kNotSymmetric, kNotPsd or kGradientMismatch.
void Validate(const ProblemSpec& p);

// Throws Error(kDimensionMismatch) when the selector does not conform.
void CheckSelector(const ProblemSpec& p, const ParamSelector& sel);

std::size_t ThetaDim(const ProblemSpec& p, const ParamSelector& sel);

// Copy of `p` with the selected parameter shifted by `delta`.
ProblemSpec Perturb(const ProblemSpec& p, const ParamSelector& sel,
                    std::span<const double> delta);

}  // namespace altdiff
