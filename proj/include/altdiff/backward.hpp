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
#include <utility>
#include <vector>

#include "altdiff/forward.hpp"
#include "altdiff/numerics/factorization.hpp"
#include "altdiff/numerics/matrix.hpp"
#include "altdiff/problem.hpp"

namespace altdiff {

// Jacobians of the splitting iterate with respect to theta. Each block has
// theta_dim columns.
//
// Instances that own storage are counted per thread so tests can confirm the
// recursion keeps a single state alive; moved-from instances do not count.
class JacobianState {
 public:
  JacobianState() = default;
  JacobianState(const JacobianState& other);
  JacobianState(JacobianState&& other) noexcept;
  JacobianState& operator=(const JacobianState& other);
  JacobianState& operator=(JacobianState&& other) noexcept;
  ~JacobianState();

  static JacobianState Zero(std::size_t n, std::size_t ineq, std::size_t eq,
                            std::size_t theta_dim);

  DenseMatrix Jx;       // n x theta_dim
  DenseMatrix Js;       // m_ineq x theta_dim
  DenseMatrix Jlambda;  // p x theta_dim
  DenseMatrix Jnu;      // m_ineq x theta_dim

  static std::size_t LiveCount() noexcept;
  static std::size_t PeakCount() noexcept;
  static void ResetPeak() noexcept;

 private:
  void Acquire() noexcept;
  void Release() noexcept;
  bool owning_ = false;
};

struct DiffReport {
  ForwardReport forward;
  JacobianState jac;
  std::vector<double> jac_step_norms;  // ||Jx_k+1 - Jx_k||_F
  bool weakly_active_warning = false;
  double backward_ms = 0.0;
  std::size_t backward_factorizations = 0;
};

// d/dtheta of grad_x L(x_new, s_k, lambda_k, nu_k; theta) with x_new held
// fixed, chained through the k-th slack and dual Jacobians. `prev` is the
// k-th iterate (its s, lambda, nu are used by direction-mode terms).
DenseMatrix MixedPartial(const ProblemSpec& p, const ParamSelector& sel,
                         const AdmmState& prev, const JacobianState& jac,
                         std::span<const double> x_new, double rho);

// -solve(fact, mixed)
DenseMatrix PrimalJacobianUpdate(const Factorization& fact, const DenseMatrix& mixed);

// Row i is -(1/rho)(Jnu + rho (G Jx_new - h_jac)) where s_new[i] > 0 and
// zero where s_new[i] == 0. `h_jac` is the derivative of h (or of h - dG x
// in direction mode) and may be empty for "zero".
DenseMatrix SlackJacobianUpdate(std::span<const double> s_new, const DenseMatrix& Jnu,
                                const DenseMatrix& Jx_new, const DenseMatrix& G,
                                const DenseMatrix& h_jac, const SolverConfig& cfg);

// Jlambda + rho (A Jx_new - db/dtheta), Jnu + rho (G Jx_new + Js_new - dh/dtheta).
// `x_new` is only read in direction mode.
std::pair<DenseMatrix, DenseMatrix> DualJacobianUpdate(
    const ProblemSpec& p, const ParamSelector& sel, const DenseMatrix& Jlambda,
    const DenseMatrix& Jnu, const DenseMatrix& Jx_new, const DenseMatrix& Js_new,
    std::span<const double> x_new, const SolverConfig& cfg);

struct DiffOptions {
  HessianStrategy hessian;
  // Called after every outer iteration with the new iterate and Jacobians.
  std::function<void(const AdmmState&, const JacobianState&)> observer;
};

// Forward splitting updates and Jacobian recursion in lockstep, one
// JacobianState overwritten in place. Non-convergence is reported through
// forward.converged; solver errors propagate.
DiffReport Differentiate(const ProblemSpec& p, const ParamSelector& sel,
                         const SolverConfig& cfg, const DiffOptions& opts = {});

struct TruncatedRun {
  double eps = 0.0;
  DiffReport report;
  double x_error = 0.0;    // ||x - x_ref||_2 against the tightest run
  double jac_error = 0.0;  // ||Jx - Jx_ref||_F against the tightest run
};

// One fresh run per tolerance; `eps_list` must be strictly descending.
std::vector<TruncatedRun> TruncatedDifferentiate(const ProblemSpec& p,
                                                 const ParamSelector& sel,
                                                 const SolverConfig& cfg,
                                                 std::span<const double> eps_list);

// dR/dx^T Jx
Vector Vjp(const DiffReport& report, std::span<const double> dR_dx);

}  // namespace altdiff
