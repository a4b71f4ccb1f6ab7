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

#include "altdiff/layers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "altdiff/error.hpp"
#include "altdiff/numerics/linalg.hpp"

namespace altdiff::layers {
namespace {

constexpr double kClip = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void CheckBox(const Vector& y, const Vector& u) {
  if (y.empty()) throw Error(ErrorCode::kDimensionMismatch, "layer needs n >= 1");
  if (y.size() != u.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "y has " + std::to_string(y.size()) + " entries, u has " +
                    std::to_string(u.size()));
  }
  for (double v : u) {
    if (!(v > 0.0)) throw Error(ErrorCode::kInfeasibleLayer, "upper bounds must be > 0");
  }
  if (std::accumulate(u.begin(), u.end(), 0.0) < 1.0) {
    throw Error(ErrorCode::kInfeasibleLayer, "upper bounds sum to less than 1");
  }
}

// 1^T x = 1, -x <= 0, x <= u
Polyhedron Simplex(const Vector& u) {
  const std::size_t n = u.size();
  Polyhedron c;
  c.A = DenseMatrix(1, n, Vector(n, 1.0));
  c.b = {1.0};
  c.G = DenseMatrix(2 * n, n);
  c.h.assign(2 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    c.G(i, i) = -1.0;
    c.G(n + i, i) = 1.0;
    c.h[n + i] = u[i];
  }
  return c;
}

double Clip(double v) { return std::max(v, kClip); }

// Diagonal matches the generic assembly order 2 + (rho + 2 rho) so that
// both paths produce the same bits.
DenseMatrix SimplexPenalty(std::size_t n, double rho) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rho;
    m(i, i) = rho + rho * 2.0;
  }
  return m;
}

}  // namespace

ConvexObjective SoftmaxEntropyObjective(std::span<const double> y) {
  ConvexObjective obj;
  obj.name = "softmax_entropy";
  obj.value = [](std::span<const double> x) {
    double v = 0.0;
    for (double xi : x) v += Clip(xi) * std::log(Clip(xi));
    return v;
  };
  obj.gradient = [](std::span<const double> x) {
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = 1.0 + std::log(Clip(x[i]));
    return g;
  };
  obj.hessian = [](std::span<const double> x) {
    DenseMatrix h(x.size(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) h(i, i) = 1.0 / Clip(x[i]);
    return h;
  };
  obj.in_domain = [](std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return v > 0.0; });
  };
  obj.q.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) obj.q[i] = -y[i];
  return obj;
}

ProblemSpec Build(const LayerKind& kind) {
  return std::visit(
      Overloaded{
          [](const QuadraticLayer& l) {
            ProblemSpec p{l.q.size(), QuadraticObjective{l.P, l.q}, l.constraints};
            Validate(p);
            return p;
          },
          [](const SparsemaxLayer& l) {
            CheckBox(l.y, l.u);
            const std::size_t n = l.y.size();
            DenseMatrix P = DenseMatrix::Identity(n);
            for (std::size_t i = 0; i < n; ++i) P(i, i) = 2.0;
            ProblemSpec p{n, QuadraticObjective{std::move(P), Scaled(l.y, -2.0)},
                          Simplex(l.u)};
            CheckDimensions(p);
            return p;
          },
          [](const SoftmaxLayer& l) {
            CheckBox(l.y, l.u);
            ProblemSpec p{l.y.size(), SoftmaxEntropyObjective(l.y), Simplex(l.u)};
            CheckDimensions(p);
            return p;
          },
      },
      kind);
}

DenseMatrix SpecializedHessian(const LayerKind& kind, std::span<const double> x,
                               double rho) {
  return std::visit(
      Overloaded{
          [&](const QuadraticLayer& l) {
            DenseMatrix pen(l.P.rows(), l.P.cols());
            if (l.constraints.eq_count() > 0) {
              AddScaledInPlace(pen, rho, Gram(l.constraints.A));
            }
            if (l.constraints.ineq_count() > 0) {
              AddScaledInPlace(pen, rho, Gram(l.constraints.G));
            }
            // P is validated symmetric; use it as stored.
            DenseMatrix h = l.P;
            AddScaledInPlace(h, 1.0, pen);
            return h;
          },
          [&](const SparsemaxLayer& l) {
            DenseMatrix h = SimplexPenalty(l.y.size(), rho);
            for (std::size_t i = 0; i < l.y.size(); ++i) h(i, i) = 2.0 + h(i, i);
            return h;
          },
          [&](const SoftmaxLayer& l) {
            RequireSameSize(x.size(), l.y.size(), "softmax x");
            DenseMatrix h = SimplexPenalty(x.size(), rho);
            for (std::size_t i = 0; i < x.size(); ++i) {
              if (!(x[i] > 0.0)) {
                throw Error(ErrorCode::kDomainError,
                            "softmax Hessian needs x > 0, x[" + std::to_string(i) +
                                "] = " + std::to_string(x[i]));
              }
              h(i, i) = 1.0 / x[i] + h(i, i);
            }
            return h;
          },
      },
      kind);
}

Factorization SpecializedHessianFactor(const LayerKind& kind, std::span<const double> x,
                                       double rho) {
  return Factorize(SpecializedHessian(kind, x, rho), true);
}

HessianStrategy SpecializedStrategy(const LayerKind& kind, double rho) {
  HessianStrategy s;
  s.constant = !std::holds_alternative<SoftmaxLayer>(kind);
  s.factor = [kind, rho](std::span<const double> x) {
    return SpecializedHessianFactor(kind, x, rho);
  };
  return s;
}

DiffReport SolveAndDiff(const LayerKind& kind, const ParamSelector& sel,
                        const SolverConfig& cfg) {
  const ProblemSpec p = Build(kind);
  DiffOptions opts;
  opts.hessian = SpecializedStrategy(kind, cfg.rho);
  return Differentiate(p, sel, cfg, opts);
}

}  // namespace altdiff::layers
