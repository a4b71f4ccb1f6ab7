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

#include "altdiff/problem.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "altdiff/error.hpp"
#include "altdiff/numerics/factorization.hpp"
#include "altdiff/numerics/linalg.hpp"

namespace altdiff {
namespace {

constexpr std::size_t kPsdCheckMaxDim = 500;
constexpr int kGradientProbes = 5;

[[noreturn]] void Mismatch(const std::string& what) {
  throw Error(ErrorCode::kDimensionMismatch, what);
}

void CheckBlock(const DenseMatrix& m, const Vector& rhs, std::size_t n,
                const char* name) {
  if (m.rows() != rhs.size()) {
    Mismatch(std::string(name) + " has " + std::to_string(m.rows()) +
             " rows but its right-hand side has " + std::to_string(rhs.size()));
  }
  if (m.rows() > 0 && m.cols() != n) {
    Mismatch(std::string(name) + " has " + std::to_string(m.cols()) +
             " columns, expected n = " + std::to_string(n));
  }
}

void CheckSymmetricPsd(const DenseMatrix& P) {
  const double norm = FrobeniusNorm(P);
  if (FrobeniusDistance(P, Transpose(P)) > 1e-10 * norm) {
    throw Error(ErrorCode::kNotSymmetric, "P differs from its transpose");
  }
  if (P.rows() > kPsdCheckMaxDim) return;
  // Cholesky of P + shift*I succeeds iff the smallest eigenvalue of P is
  // above -shift (up to rounding).
  double max_row = 0.0;
  for (std::size_t i = 0; i < P.rows(); ++i) max_row = std::max(max_row, Norm2(P.row(i)));
  const double shift = 1e-8 + 1e-11 * max_row;
  DenseMatrix shifted = P;
  for (std::size_t i = 0; i < P.rows(); ++i) shifted(i, i) += shift;
  bool psd = false;
  try {
    psd = Factorize(shifted, true).kind() == Factorization::Kind::kCholesky;
  } catch (const Error&) {
    psd = false;
  }
  if (!psd) {
    throw Error(ErrorCode::kNotPsd, "P has an eigenvalue below -1e-8");
  }
}

void CheckGradient(const ConvexObjective& obj, std::size_t n) {
  if (!obj.value || !obj.gradient || !obj.hessian) {
    throw Error(ErrorCode::kInvalidArgument,
                "convex objective needs value, gradient and hessian callbacks");
  }
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> dist(0.1, 1.0);
  Vector x(n);
  for (int probe = 0; probe < kGradientProbes; ++probe) {
    for (double& xi : x) xi = dist(rng);
    if (obj.in_domain && !obj.in_domain(x)) continue;
    const Vector g = obj.gradient(x);
    if (g.size() != n) Mismatch("gradient callback returned wrong length");
    Vector fd(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double step = 1e-6 * std::max(1.0, std::abs(x[i]));
      Vector xp = x;
      Vector xm = x;
      xp[i] += step;
      xm[i] -= step;
      fd[i] = (obj.value(xp) - obj.value(xm)) / (2.0 * step);
    }
    if (Distance2(g, fd) > 1e-4 * std::max(1.0, Norm2(g))) {
      throw Error(ErrorCode::kGradientMismatch,
                  "gradient callback disagrees with finite differences of value");
    }
  }
}

void CheckOptionalBlock(const DenseMatrix& m, std::size_t rows, std::size_t cols,
                        const char* name) {
  if (m.rows() == 0 && m.cols() == 0) return;  // absent
  if (m.rows() != rows || m.cols() != cols) {
    Mismatch(std::string("direction block ") + name + " must be " +
             std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void CheckOptionalVector(const Vector& v, std::size_t len, const char* name) {
  if (!v.empty() && v.size() != len) {
    Mismatch(std::string("direction block ") + name + " must have length " +
             std::to_string(len));
  }
}

void ShiftMatrix(DenseMatrix& m, const DenseMatrix& d, double t) {
  if (d.rows() == 0 && d.cols() == 0) return;
  AddScaledInPlace(m, t, d);
}

void ShiftVector(Vector& v, const Vector& d, double t) {
  if (d.empty()) return;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += t * d[i];
}

}  // namespace

const Vector& ProblemSpec::linear_cost() const {
  return std::visit([](const auto& obj) -> const Vector& { return obj.q; }, objective);
}

Vector& ProblemSpec::linear_cost() {
  return std::visit([](auto& obj) -> Vector& { return obj.q; }, objective);
}

double ProblemSpec::ObjectiveValue(std::span<const double> x) const {
  if (const auto* quad = std::get_if<QuadraticObjective>(&objective)) {
    return 0.5 * Dot(x, Matvec(quad->P, x)) + Dot(quad->q, x);
  }
  const auto& obj = convex();
  return obj.value(x) + Dot(obj.q, x);
}

Vector ProblemSpec::ObjectiveGradient(std::span<const double> x) const {
  if (const auto* quad = std::get_if<QuadraticObjective>(&objective)) {
    return Add(Matvec(quad->P, x), quad->q);
  }
  const auto& obj = convex();
  return Add(obj.gradient(x), obj.q);
}

DenseMatrix ProblemSpec::ObjectiveHessian(std::span<const double> x) const {
  if (const auto* quad = std::get_if<QuadraticObjective>(&objective)) return quad->P;
  return convex().hessian(x);
}

std::string SelectorName(const ParamSelector& sel) {
  struct Namer {
    std::string operator()(const LinearCost&) const { return "q"; }
    std::string operator()(const EqRhs&) const { return "b"; }
    std::string operator()(const IneqRhs&) const { return "h"; }
    std::string operator()(const Direction&) const { return "direction"; }
  };
  return std::visit(Namer{}, sel);
}

void CheckDimensions(const ProblemSpec& p) {
  if (p.n == 0) Mismatch("problem has no variables");
  if (const auto* quad = std::get_if<QuadraticObjective>(&p.objective)) {
    if (quad->P.rows() != p.n || quad->P.cols() != p.n) {
      Mismatch("P must be n x n with n = " + std::to_string(p.n));
    }
  }
  if (p.linear_cost().size() != p.n) Mismatch("q must have length n");
  CheckBlock(p.constraints.A, p.constraints.b, p.n, "A");
  CheckBlock(p.constraints.G, p.constraints.h, p.n, "G");
}

void Validate(const ProblemSpec& p) {
  CheckDimensions(p);
  std::visit(
      [&](const auto& obj) {
        using T = std::decay_t<decltype(obj)>;
        if constexpr (std::is_same_v<T, QuadraticObjective>) {
          CheckSymmetricPsd(obj.P);
        } else {
          CheckGradient(obj, p.n);
        }
      },
      p.objective);
}

void CheckSelector(const ProblemSpec& p, const ParamSelector& sel) {
  const auto* dir = std::get_if<Direction>(&sel);
  if (dir == nullptr) return;
  CheckOptionalBlock(dir->dP, p.n, p.n, "dP");
  if (!p.is_quadratic() && !(dir->dP.rows() == 0 && dir->dP.cols() == 0)) {
    Mismatch("dP is only defined for quadratic objectives");
  }
  CheckOptionalVector(dir->dq, p.n, "dq");
  CheckOptionalBlock(dir->dA, p.eq_count(), p.n, "dA");
  CheckOptionalVector(dir->db, p.eq_count(), "db");
  CheckOptionalBlock(dir->dG, p.ineq_count(), p.n, "dG");
  CheckOptionalVector(dir->dh, p.ineq_count(), "dh");
}

std::size_t ThetaDim(const ProblemSpec& p, const ParamSelector& sel) {
  CheckSelector(p, sel);
  struct Dim {
    const ProblemSpec& p;
    std::size_t operator()(const LinearCost&) const { return p.n; }
    std::size_t operator()(const EqRhs&) const { return p.eq_count(); }
    std::size_t operator()(const IneqRhs&) const { return p.ineq_count(); }
    std::size_t operator()(const Direction&) const { return 1; }
  };
  return std::visit(Dim{p}, sel);
}

ProblemSpec Perturb(const ProblemSpec& p, const ParamSelector& sel,
                    std::span<const double> delta) {
  RequireSameSize(delta.size(), ThetaDim(p, sel), "perturbation length");
  ProblemSpec out = p;
  if (std::holds_alternative<LinearCost>(sel)) {
    AxpyInPlace(1.0, delta, out.linear_cost());
  } else if (std::holds_alternative<EqRhs>(sel)) {
    AxpyInPlace(1.0, delta, out.constraints.b);
  } else if (std::holds_alternative<IneqRhs>(sel)) {
    AxpyInPlace(1.0, delta, out.constraints.h);
  } else {
    const auto& dir = std::get<Direction>(sel);
    const double t = delta[0];
    if (auto* quad = std::get_if<QuadraticObjective>(&out.objective)) {
      ShiftMatrix(quad->P, dir.dP, t);
    }
    ShiftVector(out.linear_cost(), dir.dq, t);
    ShiftMatrix(out.constraints.A, dir.dA, t);
    ShiftVector(out.constraints.b, dir.db, t);
    ShiftMatrix(out.constraints.G, dir.dG, t);
    ShiftVector(out.constraints.h, dir.dh, t);
  }
  return out;
}

}  // namespace altdiff
