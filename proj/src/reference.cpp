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

#include "altdiff/reference.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "altdiff/error.hpp"
#include "altdiff/numerics/factorization.hpp"
#include "altdiff/numerics/linalg.hpp"

namespace altdiff::reference {
namespace {

constexpr double kStrictComplementarityTol = 1e-8;
constexpr double kOptimalityTol = 1e-6;

bool Absent(const DenseMatrix& m) { return m.rows() == 0 && m.cols() == 0; }

Vector IneqSlack(const ProblemSpec& p, std::span<const double> x) {
  if (p.ineq_count() == 0) return {};
  return Subtract(Matvec(p.constraints.G, x), p.constraints.h);
}

// Newton on [grad f + A^T lambda + Ga^T mu; A x - b; Ga x - ha] = 0 for the
// active rows `active`. Returns false when the system is singular or the
// iteration stalls.
bool PolishActiveSet(const ProblemSpec& p, const std::vector<std::size_t>& active,
                     Vector& x, Vector& lambda, Vector& mu) {
  const std::size_t n = p.n;
  const std::size_t eq = p.eq_count();
  const std::size_t na = active.size();
  const std::size_t dim = n + eq + na;
  auto residual = [&](const Vector& xv, const Vector& lv, const Vector& mv) {
    Vector r(dim, 0.0);
    Vector g = p.ObjectiveGradient(xv);
    if (eq > 0) {
      AxpyInPlace(1.0, MatvecT(p.constraints.A, lv), g);
      const Vector ax = Matvec(p.constraints.A, xv);
      for (std::size_t i = 0; i < eq; ++i) r[n + i] = ax[i] - p.constraints.b[i];
    }
    for (std::size_t a = 0; a < na; ++a) {
      const auto gi = p.constraints.G.row(active[a]);
      AxpyInPlace(mv[a], gi, g);
      r[n + eq + a] = Dot(gi, xv) - p.constraints.h[active[a]];
    }
    std::copy(g.begin(), g.end(), r.begin());
    return r;
  };

  Vector r = residual(x, lambda, mu);
  for (int it = 0; it < 30; ++it) {
    const double rnorm = Norm2(r);
    if (rnorm <= 1e-14 * (1.0 + Norm2(x))) return true;
    DenseMatrix k(dim, dim);
    const DenseMatrix h = p.ObjectiveHessian(x);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) k(i, j) = h(i, j);
    }
    for (std::size_t i = 0; i < eq; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        k(n + i, j) = p.constraints.A(i, j);
        k(j, n + i) = p.constraints.A(i, j);
      }
    }
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t j = 0; j < n; ++j) {
        k(n + eq + a, j) = p.constraints.G(active[a], j);
        k(j, n + eq + a) = p.constraints.G(active[a], j);
      }
    }
    Vector dz = Scaled(r, -1.0);
    try {
      Factorize(k, false).SolveInPlace(dz);
    } catch (const Error&) {
      return false;
    }
    // Backtrack on the residual norm, staying inside the objective's domain.
    double alpha = 1.0;
    Vector xt(n), lt(eq), mt(na), rt;
    for (;;) {
      for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + alpha * dz[i];
      for (std::size_t i = 0; i < eq; ++i) lt[i] = lambda[i] + alpha * dz[n + i];
      for (std::size_t a = 0; a < na; ++a) mt[a] = mu[a] + alpha * dz[n + eq + a];
      const bool in_domain =
          p.is_quadratic() || !p.convex().in_domain || p.convex().in_domain(xt);
      if (in_domain) {
        rt = residual(xt, lt, mt);
        if (Norm2(rt) < rnorm || p.is_quadratic()) break;
      }
      alpha *= 0.5;
      if (alpha < 1e-10) return false;
    }
    x.swap(xt);
    lambda.swap(lt);
    mu.swap(mt);
    r.swap(rt);
  }
  return Norm2(r) <= 1e-10 * (1.0 + Norm2(x));
}

}  // namespace

Vector KktResidual(const ProblemSpec& p, std::span<const double> x,
                   std::span<const double> lambda, std::span<const double> nu) {
  RequireSameSize(x.size(), p.n, "x");
  RequireSameSize(lambda.size(), p.eq_count(), "lambda");
  RequireSameSize(nu.size(), p.ineq_count(), "nu");
  Vector r = p.ObjectiveGradient(x);
  if (p.eq_count() > 0) AxpyInPlace(1.0, MatvecT(p.constraints.A, lambda), r);
  if (p.ineq_count() > 0) AxpyInPlace(1.0, MatvecT(p.constraints.G, nu), r);
  if (p.eq_count() > 0) {
    const Vector re = Subtract(Matvec(p.constraints.A, x), p.constraints.b);
    r.insert(r.end(), re.begin(), re.end());
  }
  const Vector gs = IneqSlack(p, x);
  for (std::size_t i = 0; i < gs.size(); ++i) r.push_back(nu[i] * gs[i]);
  return r;
}

KktSystem AssembleKkt(const ProblemSpec& p, std::span<const double> x,
                      std::span<const double> lambda, std::span<const double> nu,
                      const ParamSelector& sel) {
  RequireSameSize(x.size(), p.n, "x");
  RequireSameSize(lambda.size(), p.eq_count(), "lambda");
  RequireSameSize(nu.size(), p.ineq_count(), "nu");
  const std::size_t n = p.n;
  const std::size_t eq = p.eq_count();
  const std::size_t m = p.ineq_count();
  const std::size_t dim = n + eq + m;
  const std::size_t m_theta = ThetaDim(p, sel);
  const DenseMatrix& A = p.constraints.A;
  const DenseMatrix& G = p.constraints.G;
  const Vector gs = IneqSlack(p, x);

  KktSystem sys{DenseMatrix(dim, dim), DenseMatrix(dim, m_theta)};
  DenseMatrix& J = sys.J_tilde;
  const DenseMatrix h = p.ObjectiveHessian(x);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) J(i, j) = h(j, i);
  }
  for (std::size_t i = 0; i < eq; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      J(j, n + i) = A(i, j);
      J(n + i, j) = A(i, j);
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      J(j, n + eq + i) = G(i, j);
      J(n + eq + i, j) = nu[i] * G(i, j);
    }
    J(n + eq + i, n + eq + i) = gs[i];
  }

  DenseMatrix& R = sys.rhs;
  if (std::holds_alternative<LinearCost>(sel)) {
    for (std::size_t i = 0; i < n; ++i) R(i, i) = 1.0;
  } else if (std::holds_alternative<EqRhs>(sel)) {
    for (std::size_t i = 0; i < eq; ++i) R(n + i, i) = -1.0;
  } else if (std::holds_alternative<IneqRhs>(sel)) {
    for (std::size_t i = 0; i < m; ++i) R(n + eq + i, i) = -nu[i];
  } else {
    // Kronecker blocks of the matrix-parameter Jacobian, contracted with the
    // direction: (nu^T (x) I) vec(dG) = dG^T nu, (I (x) x^T) vec(dA) = dA x.
    const auto& dir = std::get<Direction>(sel);
    Vector top(n, 0.0);
    if (!Absent(dir.dP)) top = Matvec(dir.dP, x);
    if (!dir.dq.empty()) AxpyInPlace(1.0, dir.dq, top);
    if (!Absent(dir.dA) && eq > 0) AxpyInPlace(1.0, MatvecT(dir.dA, lambda), top);
    if (!Absent(dir.dG) && m > 0) AxpyInPlace(1.0, MatvecT(dir.dG, nu), top);
    for (std::size_t i = 0; i < n; ++i) R(i, 0) = top[i];
    if (eq > 0) {
      Vector mid(eq, 0.0);
      if (!Absent(dir.dA)) mid = Matvec(dir.dA, x);
      for (std::size_t i = 0; i < dir.db.size(); ++i) mid[i] -= dir.db[i];
      for (std::size_t i = 0; i < eq; ++i) R(n + i, 0) = mid[i];
    }
    if (m > 0) {
      Vector bot(m, 0.0);
      if (!Absent(dir.dG)) bot = Matvec(dir.dG, x);
      for (std::size_t i = 0; i < dir.dh.size(); ++i) bot[i] -= dir.dh[i];
      for (std::size_t i = 0; i < m; ++i) R(n + eq + i, 0) = nu[i] * bot[i];
    }
  }
  return sys;
}

DenseMatrix ImplicitDiffSolve(const ProblemSpec& p, std::span<const double> x,
                              std::span<const double> lambda,
                              std::span<const double> nu, const ParamSelector& sel) {
  CheckSelector(p, sel);
  const double residual = Norm2(KktResidual(p, x, lambda, nu));
  if (residual > kOptimalityTol * (1.0 + Norm2(x))) {
    throw Error(ErrorCode::kKktNotSatisfied,
                "KKT residual " + std::to_string(residual) + " too large");
  }
  const Vector gs = IneqSlack(p, x);
  for (std::size_t i = 0; i < gs.size(); ++i) {
    if (std::abs(nu[i]) <= kStrictComplementarityTol &&
        std::abs(gs[i]) <= kStrictComplementarityTol) {
      throw Error(ErrorCode::kSingularKkt,
                  "constraint " + std::to_string(i) + " is weakly active");
    }
  }
  const KktSystem sys = AssembleKkt(p, x, lambda, nu, sel);
  DenseMatrix dz;
  try {
    dz = Solve(Factorize(sys.J_tilde, false), sys.rhs);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSingularMatrix) throw;
    throw Error(ErrorCode::kSingularKkt, e.what());
  }
  DenseMatrix jx(p.n, dz.cols());
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t c = 0; c < dz.cols(); ++c) jx(i, c) = -dz(i, c);
  }
  return jx;
}

KktPoint SolveKkt(const ProblemSpec& p, const SolverConfig& cfg) {
  SolverConfig tight = cfg;
  tight.eps = std::min(cfg.eps, 1e-10);
  tight.max_outer_iters = std::max<std::size_t>(cfg.max_outer_iters, 20000);
  const ForwardReport fwd = AdmmSolve(p, tight);
  KktPoint out{fwd.state.x, fwd.state.lambda, fwd.state.nu, false};

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < p.ineq_count(); ++i) {
    if (fwd.state.nu[i] > fwd.state.s[i] * tight.rho) active.push_back(i);
  }
  Vector x = fwd.state.x;
  Vector lambda = fwd.state.lambda;
  Vector mu(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) mu[a] = fwd.state.nu[active[a]];
  if (!PolishActiveSet(p, active, x, lambda, mu)) return out;

  // Accept only a primal-dual feasible active-set solution.
  const double scale = 1.0 + Norm2(x);
  for (double v : mu) {
    if (v < -1e-9 * scale) return out;
  }
  Vector nu(p.ineq_count(), 0.0);
  for (std::size_t a = 0; a < active.size(); ++a) nu[active[a]] = std::max(mu[a], 0.0);
  const Vector gs = IneqSlack(p, x);
  for (std::size_t i = 0; i < gs.size(); ++i) {
    if (gs[i] > 1e-9 * scale) return out;
  }
  return {std::move(x), std::move(lambda), std::move(nu), true};
}

DenseMatrix FiniteDiffJacobian(const ProblemSpec& p, const ParamSelector& sel,
                               const SolverConfig& cfg, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "step must be > 0");
  SolverConfig tight = cfg;
  tight.eps = 1e-8;
  const std::size_t m_theta = ThetaDim(p, sel);
  DenseMatrix jac(p.n, m_theta);
  Vector delta(m_theta, 0.0);
  for (std::size_t j = 0; j < m_theta; ++j) {
    delta[j] = step;
    const Vector xp = AdmmSolve(Perturb(p, sel, delta), tight).state.x;
    delta[j] = -step;
    const Vector xm = AdmmSolve(Perturb(p, sel, delta), tight).state.x;
    delta[j] = 0.0;
    for (std::size_t i = 0; i < p.n; ++i) jac(i, j) = (xp[i] - xm[i]) / (2.0 * step);
  }
  return jac;
}

}  // namespace altdiff::reference
