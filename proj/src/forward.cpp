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

#include "altdiff/forward.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "altdiff/error.hpp"
#include "altdiff/numerics/linalg.hpp"

namespace altdiff {
namespace {

using Clock = std::chrono::steady_clock;

double MillisSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// G x + s - h, or the empty vector when there are no inequalities.
Vector IneqResidual(const ProblemSpec& p, std::span<const double> x,
                    std::span<const double> s) {
  if (p.ineq_count() == 0) return {};
  Vector r = Matvec(p.constraints.G, x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += s[i] - p.constraints.h[i];
  return r;
}

Vector EqResidual(const ProblemSpec& p, std::span<const double> x) {
  if (p.eq_count() == 0) return {};
  return Subtract(Matvec(p.constraints.A, x), p.constraints.b);
}

// grad_x of the augmented Lagrangian at x for fixed (s, lambda, nu).
Vector LagrangianGradient(const ProblemSpec& p, const AdmmState& st,
                          std::span<const double> x, double rho) {
  Vector g = p.ObjectiveGradient(x);
  if (p.eq_count() > 0) {
    Vector w = EqResidual(p, x);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = st.lambda[i] + rho * w[i];
    AxpyInPlace(1.0, MatvecT(p.constraints.A, w), g);
  }
  if (p.ineq_count() > 0) {
    Vector w = IneqResidual(p, x, st.s);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = st.nu[i] + rho * w[i];
    AxpyInPlace(1.0, MatvecT(p.constraints.G, w), g);
  }
  return g;
}

double LagrangianValue(const ProblemSpec& p, const AdmmState& st,
                       std::span<const double> x, double rho) {
  double value = p.ObjectiveValue(x);
  const Vector re = EqResidual(p, x);
  const Vector ri = IneqResidual(p, x, st.s);
  value += Dot(st.lambda, re) + 0.5 * rho * Dot(re, re);
  value += Dot(st.nu, ri) + 0.5 * rho * Dot(ri, ri);
  return value;
}

bool InDomain(const ProblemSpec& p, std::span<const double> x) {
  if (p.is_quadratic()) return true;
  const auto& obj = p.convex();
  return !obj.in_domain || obj.in_domain(x);
}

PrimalUpdateResult QuadraticPrimalUpdate(const ProblemSpec& p, const AdmmState& st,
                                         double rho, HessianCache& cache) {
  // (P + rho A^T A + rho G^T G) x = -q - A^T (lambda - rho b) - G^T (nu + rho (s - h))
  Vector rhs = Scaled(p.quadratic().q, -1.0);
  if (p.eq_count() > 0) {
    Vector w(p.eq_count());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = st.lambda[i] - rho * p.constraints.b[i];
    AxpyInPlace(-1.0, MatvecT(p.constraints.A, w), rhs);
  }
  if (p.ineq_count() > 0) {
    Vector w(p.ineq_count());
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = st.nu[i] + rho * (st.s[i] - p.constraints.h[i]);
    }
    AxpyInPlace(-1.0, MatvecT(p.constraints.G, w), rhs);
  }
  PrimalUpdateResult out;
  out.factorization = cache.FactorAt(st.x);
  out.factorization->SolveInPlace(rhs);
  out.x = std::move(rhs);
  out.newton_iters = 1;
  return out;
}

PrimalUpdateResult NewtonPrimalUpdate(const ProblemSpec& p, const AdmmState& st,
                                      const SolverConfig& cfg, HessianCache& cache) {
  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-12;
  const double tol = cfg.NewtonTolFor(p);
  Vector x = st.x;
  if (!InDomain(p, x)) {
    // Fall back to a point strictly inside the positive orthant, which is
    // where every domain-restricted objective in this library lives.
    std::fill(x.begin(), x.end(), 1.0 / static_cast<double>(p.n));
  }
  Vector g = LagrangianGradient(p, st, x, cfg.rho);
  const double g0 = Norm2(g);
  PrimalUpdateResult out;
  for (std::size_t it = 0;; ++it) {
    out.factorization = cache.FactorAt(x);
    const double gnorm = Norm2(g);
    if (gnorm <= tol) break;
    if (it >= cfg.newton_max_iters) {
      if (!(gnorm < g0)) {
        throw Error(ErrorCode::kNewtonDiverged,
                    "gradient norm " + std::to_string(gnorm) + " not reduced after " +
                        std::to_string(it) + " Newton steps");
      }
      break;
    }
    Vector dx = Scaled(g, -1.0);
    out.factorization->SolveInPlace(dx);
    const double slope = Dot(g, dx);
    const double f0 = LagrangianValue(p, st, x, cfg.rho);
    double alpha = cfg.alpha0;
    Vector trial(x.size());
    Vector g_trial;
    for (;;) {
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + alpha * dx[i];
      if (InDomain(p, trial)) {
        if (LagrangianValue(p, st, trial, cfg.rho) <= f0 + kArmijo * alpha * slope) {
          g_trial = LagrangianGradient(p, st, trial, cfg.rho);
          break;
        }
        // Close to the minimizer the value decrease drops below rounding;
        // a shrinking gradient is then the usable signal.
        g_trial = LagrangianGradient(p, st, trial, cfg.rho);
        if (Norm2(g_trial) <= (1.0 - kArmijo * alpha) * gnorm) break;
      }
      alpha *= 0.5;
      if (alpha < kMinStep) break;
    }
    if (alpha < kMinStep) {
      // No decrease representable in double precision: x is as good as it
      // gets at this tolerance.
      break;
    }
    x.swap(trial);
    g = std::move(g_trial);
    ++out.newton_iters;
  }
  out.x = std::move(x);
  return out;
}

}  // namespace

void CheckConfig(const SolverConfig& cfg) {
  if (!(cfg.rho > 0.0)) throw Error(ErrorCode::kInvalidArgument, "rho must be > 0");
  if (!(cfg.eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eps must be > 0");
  if (cfg.max_outer_iters < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_outer_iters must be >= 1");
  }
  if (cfg.newton_tol && !(*cfg.newton_tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "newton_tol must be > 0");
  }
  if (cfg.newton_max_iters < 1) {
    throw Error(ErrorCode::kInvalidArgument, "newton_max_iters must be >= 1");
  }
  if (!(cfg.alpha0 > 0.0 && cfg.alpha0 <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "alpha0 must lie in (0, 1]");
  }
}

AdmmState InitialState(const ProblemSpec& p) {
  AdmmState st;
  st.x.assign(p.n, 0.0);
  st.lambda.assign(p.eq_count(), 0.0);
  st.nu.assign(p.ineq_count(), 0.0);
  st.s.resize(p.ineq_count());
  for (std::size_t i = 0; i < st.s.size(); ++i) {
    st.s[i] = std::max(0.0, p.constraints.h[i]);
  }
  return st;
}

HessianCache::HessianCache(const ProblemSpec& p, double rho, HessianStrategy strategy)
    : problem_(&p), strategy_(std::move(strategy)), penalty_gram_(p.n, p.n) {
  if (p.eq_count() > 0) AddScaledInPlace(penalty_gram_, rho, Gram(p.constraints.A));
  if (p.ineq_count() > 0) AddScaledInPlace(penalty_gram_, rho, Gram(p.constraints.G));
}

std::shared_ptr<const Factorization> HessianCache::FactorAt(std::span<const double> x) {
  const bool constant = strategy_.factor ? strategy_.constant : problem_->is_quadratic();
  if (constant && constant_) return constant_;
  std::shared_ptr<const Factorization> f;
  if (strategy_.factor) {
    // Closed-form strategies assemble inside the call; timed as a whole.
    const auto start = Clock::now();
    f = std::make_shared<const Factorization>(strategy_.factor(x));
    factor_seconds_ += MillisSince(start) * 1e-3;
  } else {
    DenseMatrix h = problem_->ObjectiveHessian(x);
    AddScaledInPlace(h, 1.0, penalty_gram_);
    const auto start = Clock::now();
    f = std::make_shared<const Factorization>(Factorize(h, true));
    factor_seconds_ += MillisSince(start) * 1e-3;
  }
  ++factorizations_;
  if (constant) constant_ = f;
  return f;
}

PrimalUpdateResult PrimalUpdate(const ProblemSpec& p, const AdmmState& st,
                                const SolverConfig& cfg, HessianCache& cache) {
  if (p.is_quadratic()) return QuadraticPrimalUpdate(p, st, cfg.rho, cache);
  return NewtonPrimalUpdate(p, st, cfg, cache);
}

PrimalUpdateResult PrimalUpdate(const ProblemSpec& p, const AdmmState& st,
                                const SolverConfig& cfg) {
  HessianCache cache(p, cfg.rho);
  return PrimalUpdate(p, st, cfg, cache);
}

Vector SlackUpdate(const AdmmState& st, const DenseMatrix& G, std::span<const double> h,
                   std::span<const double> x_new, const SolverConfig& cfg) {
  RequireSameSize(st.nu.size(), h.size(), "slack update duals");
  if (h.empty()) return {};
  Vector s = Matvec(G, x_new);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = std::max(0.0, -st.nu[i] / cfg.rho - (s[i] - h[i]));
  }
  return s;
}

std::pair<Vector, Vector> DualUpdate(const AdmmState& st, const DenseMatrix& A,
                                     std::span<const double> b, const DenseMatrix& G,
                                     std::span<const double> h,
                                     std::span<const double> x_new,
                                     std::span<const double> s_new,
                                     const SolverConfig& cfg) {
  RequireSameSize(st.lambda.size(), b.size(), "equality duals");
  RequireSameSize(st.nu.size(), h.size(), "inequality duals");
  RequireSameSize(s_new.size(), h.size(), "slack");
  Vector lambda = st.lambda;
  if (!b.empty()) {
    const Vector ax = Matvec(A, x_new);
    for (std::size_t i = 0; i < lambda.size(); ++i) lambda[i] += cfg.rho * (ax[i] - b[i]);
  }
  Vector nu = st.nu;
  if (!h.empty()) {
    const Vector gx = Matvec(G, x_new);
    for (std::size_t i = 0; i < nu.size(); ++i) {
      nu[i] += cfg.rho * (gx[i] + s_new[i] - h[i]);
    }
  }
  return {std::move(lambda), std::move(nu)};
}

AdmmIterator::AdmmIterator(const ProblemSpec& p, const SolverConfig& cfg,
                           HessianStrategy strategy)
    : problem_(&p), cfg_(cfg), cache_(p, cfg.rho, std::move(strategy)) {
  CheckConfig(cfg);
  CheckDimensions(p);
  report_.state = InitialState(p);
}

double AdmmIterator::Step() {
  const ProblemSpec& p = *problem_;
  const auto start = Clock::now();
  const double factor_before = cache_.factor_seconds();

  PrimalUpdateResult primal = PrimalUpdate(p, report_.state, cfg_, cache_);
  Vector s_new = SlackUpdate(report_.state, p.constraints.G, p.constraints.h, primal.x, cfg_);
  auto [lambda_new, nu_new] = DualUpdate(report_.state, p.constraints.A, p.constraints.b,
                                         p.constraints.G, p.constraints.h, primal.x,
                                         s_new, cfg_);

  const double step = RelativeStepNorm(primal.x, report_.state.x);
  double dual_res = 0.0;
  if (p.ineq_count() > 0) {
    const Vector ds = Subtract(s_new, report_.state.s);
    dual_res = cfg_.rho * Norm2(MatvecT(p.constraints.G, ds));
  }

  previous_ = std::move(report_.state);
  AdmmState& st = report_.state;
  st.x = std::move(primal.x);
  st.s = std::move(s_new);
  st.lambda = std::move(lambda_new);
  st.nu = std::move(nu_new);
  st.k = previous_.k + 1;

  report_.hessian_factorization = std::move(primal.factorization);
  report_.newton_iters += primal.newton_iters;
  report_.step_norms.push_back(step);
  report_.eq_residuals.push_back(Norm2(EqResidual(p, st.x)));
  report_.ineq_residuals.push_back(Norm2(IneqResidual(p, st.x, st.s)));
  report_.dual_residuals.push_back(dual_res);

  const double factor_ms = (cache_.factor_seconds() - factor_before) * 1e3;
  report_.factor_ms += factor_ms;
  report_.forward_ms += MillisSince(start) - factor_ms;
  return step;
}

bool AdmmIterator::Converged(double step) const {
  if (!(step < cfg_.eps)) return false;
  if (!cfg_.gate_residuals || report_.eq_residuals.empty()) return true;
  const ProblemSpec& p = *problem_;
  const Polyhedron& c = p.constraints;
  if (report_.eq_residuals.back() > cfg_.eps * (1.0 + Norm2(c.b)) ||
      report_.ineq_residuals.back() > cfg_.eps * (1.0 + Norm2(c.h))) {
    return false;
  }
  // Only reached once the cheap tests pass.
  const AdmmState& st = report_.state;
  Vector stat = p.ObjectiveGradient(st.x);
  double sq = 0.0;
  if (p.eq_count() > 0) {
    AxpyInPlace(1.0, MatvecT(c.A, st.lambda), stat);
    sq += report_.eq_residuals.back() * report_.eq_residuals.back();
  }
  if (p.ineq_count() > 0) {
    AxpyInPlace(1.0, MatvecT(c.G, st.nu), stat);
    const Vector gx = Matvec(c.G, st.x);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double cs = st.nu[i] * (gx[i] - c.h[i]);
      sq += cs * cs;
    }
  }
  const double stat_norm = Norm2(stat);
  return std::sqrt(sq + stat_norm * stat_norm) <= cfg_.eps * (1.0 + Norm2(st.x));
}

ForwardReport AdmmIterator::Finish(bool converged) && {
  report_.converged = converged;
  report_.hessian_factorizations = cache_.factorizations();
  return std::move(report_);
}

ForwardReport AdmmSolve(const ProblemSpec& p, const SolverConfig& cfg,
                        HessianStrategy strategy) {
  AdmmIterator it(p, cfg, std::move(strategy));
  bool converged = false;
  while (it.state().k < cfg.max_outer_iters) {
    if (it.Converged(it.Step())) {
      converged = true;
      break;
    }
  }
  return std::move(it).Finish(converged);
}

}  // namespace altdiff
