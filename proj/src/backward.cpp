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

#include "altdiff/backward.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>

#include "altdiff/error.hpp"
#include "altdiff/numerics/linalg.hpp"

namespace altdiff {
namespace {

constexpr double kWeakActivityTol = 1e-6;

thread_local std::size_t live_states = 0;
thread_local std::size_t peak_states = 0;

bool Absent(const DenseMatrix& m) { return m.rows() == 0 && m.cols() == 0; }

// d(A x - b)/dtheta with x held fixed.
DenseMatrix EqDirect(const ProblemSpec& p, const ParamSelector& sel,
                     std::span<const double> x) {
  const std::size_t rows = p.eq_count();
  const std::size_t cols = ThetaDim(p, sel);
  DenseMatrix d(rows, cols);
  if (std::holds_alternative<EqRhs>(sel)) {
    for (std::size_t i = 0; i < rows; ++i) d(i, i) = -1.0;
  } else if (const auto* dir = std::get_if<Direction>(&sel)) {
    if (!Absent(dir->dA)) {
      const Vector dax = Matvec(dir->dA, x);
      for (std::size_t i = 0; i < rows; ++i) d(i, 0) += dax[i];
    }
    for (std::size_t i = 0; i < dir->db.size(); ++i) d(i, 0) -= dir->db[i];
  }
  return d;
}

// d(G x - h)/dtheta with x held fixed.
DenseMatrix IneqDirect(const ProblemSpec& p, const ParamSelector& sel,
                       std::span<const double> x) {
  const std::size_t rows = p.ineq_count();
  const std::size_t cols = ThetaDim(p, sel);
  DenseMatrix d(rows, cols);
  if (std::holds_alternative<IneqRhs>(sel)) {
    for (std::size_t i = 0; i < rows; ++i) d(i, i) = -1.0;
  } else if (const auto* dir = std::get_if<Direction>(&sel)) {
    if (!Absent(dir->dG)) {
      const Vector dgx = Matvec(dir->dG, x);
      for (std::size_t i = 0; i < rows; ++i) d(i, 0) += dgx[i];
    }
    for (std::size_t i = 0; i < dir->dh.size(); ++i) d(i, 0) -= dir->dh[i];
  }
  return d;
}

// Direction-mode terms of the mixed partial that do not pass through the
// constraint residual derivatives: dP x + dq + dA^T w_eq + dG^T w_ineq with
// w the multiplier-plus-penalty weights at (x_new, s_k, lambda_k, nu_k).
Vector DirectionObjectiveTerms(const ProblemSpec& p, const Direction& dir,
                               const AdmmState& prev, std::span<const double> x,
                               double rho) {
  Vector out(p.n, 0.0);
  if (!Absent(dir.dP)) out = Matvec(dir.dP, x);
  if (!dir.dq.empty()) AxpyInPlace(1.0, dir.dq, out);
  if (!Absent(dir.dA) && p.eq_count() > 0) {
    Vector w = Matvec(p.constraints.A, x);
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = prev.lambda[i] + rho * (w[i] - p.constraints.b[i]);
    }
    AxpyInPlace(1.0, MatvecT(dir.dA, w), out);
  }
  if (!Absent(dir.dG) && p.ineq_count() > 0) {
    Vector w = Matvec(p.constraints.G, x);
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = prev.nu[i] + rho * (w[i] + prev.s[i] - p.constraints.h[i]);
    }
    AxpyInPlace(1.0, MatvecT(dir.dG, w), out);
  }
  return out;
}

void RequireShape(const DenseMatrix& m, std::size_t rows, std::size_t cols,
                  const char* what) {
  RequireSameSize(m.rows(), rows, what);
  RequireSameSize(m.cols(), cols, what);
}

}  // namespace

JacobianState::JacobianState(const JacobianState& other)
    : Jx(other.Jx), Js(other.Js), Jlambda(other.Jlambda), Jnu(other.Jnu) {
  if (other.owning_) Acquire();
}

JacobianState::JacobianState(JacobianState&& other) noexcept
    : Jx(std::move(other.Jx)),
      Js(std::move(other.Js)),
      Jlambda(std::move(other.Jlambda)),
      Jnu(std::move(other.Jnu)),
      owning_(other.owning_) {
  other.owning_ = false;
}

JacobianState& JacobianState::operator=(const JacobianState& other) {
  if (this == &other) return *this;
  Jx = other.Jx;
  Js = other.Js;
  Jlambda = other.Jlambda;
  Jnu = other.Jnu;
  if (other.owning_ && !owning_) Acquire();
  if (!other.owning_ && owning_) Release();
  return *this;
}

JacobianState& JacobianState::operator=(JacobianState&& other) noexcept {
  if (this == &other) return *this;
  Jx = std::move(other.Jx);
  Js = std::move(other.Js);
  Jlambda = std::move(other.Jlambda);
  Jnu = std::move(other.Jnu);
  if (owning_) Release();
  owning_ = other.owning_;
  other.owning_ = false;
  return *this;
}

JacobianState::~JacobianState() {
  if (owning_) Release();
}

JacobianState JacobianState::Zero(std::size_t n, std::size_t ineq, std::size_t eq,
                                  std::size_t theta_dim) {
  JacobianState st;
  st.Jx = DenseMatrix(n, theta_dim);
  st.Js = DenseMatrix(ineq, theta_dim);
  st.Jlambda = DenseMatrix(eq, theta_dim);
  st.Jnu = DenseMatrix(ineq, theta_dim);
  st.Acquire();
  return st;
}

void JacobianState::Acquire() noexcept {
  owning_ = true;
  peak_states = std::max(peak_states, ++live_states);
}

void JacobianState::Release() noexcept {
  owning_ = false;
  --live_states;
}

std::size_t JacobianState::LiveCount() noexcept { return live_states; }
std::size_t JacobianState::PeakCount() noexcept { return peak_states; }
void JacobianState::ResetPeak() noexcept { peak_states = live_states; }

DenseMatrix MixedPartial(const ProblemSpec& p, const ParamSelector& sel,
                         const AdmmState& prev, const JacobianState& jac,
                         std::span<const double> x_new, double rho) {
  const std::size_t m_theta = ThetaDim(p, sel);
  RequireSameSize(x_new.size(), p.n, "x_new");
  RequireShape(jac.Jlambda, p.eq_count(), m_theta, "Jlambda shape");
  RequireShape(jac.Jnu, p.ineq_count(), m_theta, "Jnu shape");
  RequireShape(jac.Js, p.ineq_count(), m_theta, "Js shape");

  DenseMatrix mixed(p.n, m_theta);
  if (p.eq_count() > 0) {
    DenseMatrix w = EqDirect(p, sel, x_new);
    for (std::size_t i = 0; i < w.size(); ++i) {
      w.data()[i] = jac.Jlambda.data()[i] + rho * w.data()[i];
    }
    mixed = MatmulTn(p.constraints.A, w);
  }
  if (p.ineq_count() > 0) {
    DenseMatrix w = IneqDirect(p, sel, x_new);
    for (std::size_t i = 0; i < w.size(); ++i) {
      w.data()[i] = jac.Jnu.data()[i] + rho * (jac.Js.data()[i] + w.data()[i]);
    }
    AddScaledInPlace(mixed, 1.0, MatmulTn(p.constraints.G, w));
  }
  if (std::holds_alternative<LinearCost>(sel)) {
    for (std::size_t i = 0; i < p.n; ++i) mixed(i, i) += 1.0;
  } else if (const auto* dir = std::get_if<Direction>(&sel)) {
    const Vector extra = DirectionObjectiveTerms(p, *dir, prev, x_new, rho);
    for (std::size_t i = 0; i < p.n; ++i) mixed(i, 0) += extra[i];
  }
  return mixed;
}

DenseMatrix PrimalJacobianUpdate(const Factorization& fact, const DenseMatrix& mixed) {
  DenseMatrix jx = Solve(fact, mixed);
  for (std::size_t i = 0; i < jx.size(); ++i) jx.data()[i] = -jx.data()[i];
  return jx;
}

DenseMatrix SlackJacobianUpdate(std::span<const double> s_new, const DenseMatrix& Jnu,
                                const DenseMatrix& Jx_new, const DenseMatrix& G,
                                const DenseMatrix& h_jac, const SolverConfig& cfg) {
  const std::size_t m = s_new.size();
  const std::size_t cols = Jx_new.cols();
  RequireShape(Jnu, m, cols, "Jnu shape");
  if (!Absent(h_jac)) RequireShape(h_jac, m, cols, "h_jac shape");
  DenseMatrix js(m, cols);
  if (m == 0) return js;
  const DenseMatrix gjx = Matmul(G, Jx_new);
  const double inv_rho = 1.0 / cfg.rho;
  for (std::size_t i = 0; i < m; ++i) {
    // sgn(s) = 1 only for strictly positive slack.
    if (!(s_new[i] > 0.0)) continue;
    for (std::size_t c = 0; c < cols; ++c) {
      const double dh = Absent(h_jac) ? 0.0 : h_jac(i, c);
      js(i, c) = -inv_rho * (Jnu(i, c) + cfg.rho * (gjx(i, c) - dh));
    }
  }
  return js;
}

std::pair<DenseMatrix, DenseMatrix> DualJacobianUpdate(
    const ProblemSpec& p, const ParamSelector& sel, const DenseMatrix& Jlambda,
    const DenseMatrix& Jnu, const DenseMatrix& Jx_new, const DenseMatrix& Js_new,
    std::span<const double> x_new, const SolverConfig& cfg) {
  const std::size_t cols = Jx_new.cols();
  RequireShape(Jlambda, p.eq_count(), cols, "Jlambda shape");
  RequireShape(Jnu, p.ineq_count(), cols, "Jnu shape");
  RequireShape(Js_new, p.ineq_count(), cols, "Js shape");
  DenseMatrix lambda_new = Jlambda;
  if (p.eq_count() > 0) {
    DenseMatrix step = Matmul(p.constraints.A, Jx_new);
    AddScaledInPlace(step, 1.0, EqDirect(p, sel, x_new));
    AddScaledInPlace(lambda_new, cfg.rho, step);
  }
  DenseMatrix nu_new = Jnu;
  if (p.ineq_count() > 0) {
    DenseMatrix step = Matmul(p.constraints.G, Jx_new);
    AddScaledInPlace(step, 1.0, Js_new);
    AddScaledInPlace(step, 1.0, IneqDirect(p, sel, x_new));
    AddScaledInPlace(nu_new, cfg.rho, step);
  }
  return {std::move(lambda_new), std::move(nu_new)};
}

DiffReport Differentiate(const ProblemSpec& p, const ParamSelector& sel,
                         const SolverConfig& cfg, const DiffOptions& opts) {
  using Clock = std::chrono::steady_clock;
  CheckSelector(p, sel);
  const std::size_t m_theta = ThetaDim(p, sel);
  AdmmIterator it(p, cfg, opts.hessian);
  JacobianState jac = JacobianState::Zero(p.n, p.ineq_count(), p.eq_count(), m_theta);
  // s0 = max(0, h - G x0) moves with h; start Js at its derivative so that
  // every Jx_k is the exact derivative of x_k.
  {
    const AdmmState& s0 = it.state();
    const DenseMatrix d = IneqDirect(p, sel, s0.x);
    for (std::size_t i = 0; i < p.ineq_count(); ++i) {
      if (!(s0.s[i] > 0.0)) continue;
      for (std::size_t c = 0; c < m_theta; ++c) jac.Js(i, c) = -d(i, c);
    }
  }
  std::vector<double> jac_steps;
  double backward_ms = 0.0;
  const std::uint64_t factorizations_before = FactorizationCount();
  std::uint64_t forward_factorizations = 0;

  bool converged = false;
  while (it.state().k < cfg.max_outer_iters) {
    const std::uint64_t global_before = FactorizationCount();
    const double step = it.Step();
    forward_factorizations += FactorizationCount() - global_before;

    const auto start = Clock::now();
    const AdmmState& cur = it.state();
    DenseMatrix mixed = MixedPartial(p, sel, it.previous(), jac, cur.x, cfg.rho);
    DenseMatrix jx = PrimalJacobianUpdate(it.factorization(), mixed);
    DenseMatrix h_jac = Scaled(IneqDirect(p, sel, cur.x), -1.0);
    DenseMatrix js = SlackJacobianUpdate(cur.s, jac.Jnu, jx, p.constraints.G, h_jac, cfg);
    auto [jl, jn] = DualJacobianUpdate(p, sel, jac.Jlambda, jac.Jnu, jx, js, cur.x, cfg);
    jac_steps.push_back(FrobeniusDistance(jx, jac.Jx));
    jac.Jx = std::move(jx);
    jac.Js = std::move(js);
    jac.Jlambda = std::move(jl);
    jac.Jnu = std::move(jn);
    backward_ms += std::chrono::duration<double, std::milli>(Clock::now() - start).count();

    if (opts.observer) opts.observer(cur, jac);
    if (it.Converged(step)) {
      converged = true;
      break;
    }
  }

  DiffReport report;
  report.backward_factorizations =
      FactorizationCount() - factorizations_before - forward_factorizations;
  report.forward = std::move(it).Finish(converged);
  report.jac = std::move(jac);
  report.jac_step_norms = std::move(jac_steps);
  report.backward_ms = backward_ms;

  const AdmmState& st = report.forward.state;
  if (p.ineq_count() > 0) {
    const Vector gx = Matvec(p.constraints.G, st.x);
    for (std::size_t i = 0; i < p.ineq_count(); ++i) {
      if (std::abs(st.nu[i]) <= kWeakActivityTol &&
          std::abs(gx[i] - p.constraints.h[i]) <= kWeakActivityTol) {
        report.weakly_active_warning = true;
        break;
      }
    }
  }
  return report;
}

std::vector<TruncatedRun> TruncatedDifferentiate(const ProblemSpec& p,
                                                 const ParamSelector& sel,
                                                 const SolverConfig& cfg,
                                                 std::span<const double> eps_list) {
  if (eps_list.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "eps_list must not be empty");
  }
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0) || (i > 0 && !(eps_list[i] < eps_list[i - 1]))) {
      throw Error(ErrorCode::kInvalidArgument,
                  "eps_list must be positive and strictly descending");
    }
  }
  std::vector<TruncatedRun> runs;
  runs.reserve(eps_list.size());
  for (double eps : eps_list) {
    SolverConfig run_cfg = cfg;
    run_cfg.eps = eps;
    runs.push_back({eps, Differentiate(p, sel, run_cfg), 0.0, 0.0});
  }
  const DiffReport& ref = runs.back().report;
  for (TruncatedRun& run : runs) {
    run.x_error = Distance2(run.report.forward.state.x, ref.forward.state.x);
    run.jac_error = FrobeniusDistance(run.report.jac.Jx, ref.jac.Jx);
  }
  return runs;
}

Vector Vjp(const DiffReport& report, std::span<const double> dR_dx) {
  RequireSameSize(dR_dx.size(), report.jac.Jx.rows(), "vjp cotangent");
  return MatvecT(report.jac.Jx, dR_dx);
}

}  // namespace altdiff
