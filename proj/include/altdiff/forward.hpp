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
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "altdiff/numerics/factorization.hpp"
#include "altdiff/numerics/matrix.hpp"
#include "altdiff/problem.hpp"

namespace altdiff {

struct SolverConfig {
  double rho = 1.0;
  double eps = 1e-6;
  std::size_t max_outer_iters = 10000;
  // Unset: 1e-10 for quadratic objectives, 1e-8 otherwise.
  std::optional<double> newton_tol;
  std::size_t newton_max_iters = 50;
  double alpha0 = 1.0;
  // Also require ||A x - b|| <= eps (1 + ||b||), ||G x + s - h|| <=
  // eps (1 + ||h||) and a KKT residual
  // ||[grad f + A^T lambda + G^T nu; A x - b; nu .* (G x - h)]|| <= eps (1 + ||x||)
  // before stopping. Off: x step norm only.
  bool gate_residuals = true;

  double NewtonTolFor(const ProblemSpec& p) const {
    return newton_tol.value_or(p.is_quadratic() ? 1e-10 : 1e-8);
  }
};

// Throws Error(kInvalidArgument) on rho <= 0, eps <= 0, zero iteration
// limits or alpha0 outside (0, 1].
void CheckConfig(const SolverConfig& cfg);

// Iterate of the augmented-Lagrangian splitting: primal x, slack s >= 0,
// equality duals lambda, inequality duals nu.
struct AdmmState {
  Vector x;
  Vector s;
  Vector lambda;
  Vector nu;
  std::size_t k = 0;
};

// x0 = 0, lambda0 = 0, nu0 = 0, s0 = max(0, h - G x0).
AdmmState InitialState(const ProblemSpec& p);

// Replaces the generic Hessian factorization of the x-subproblem, e.g. with
// a closed form for a structured layer. `constant` means the factor does not
// depend on x and is computed once per solve.
struct HessianStrategy {
  std::function<Factorization(std::span<const double> x)> factor;
  bool constant = false;
};

// Per-solve cache of the x-subproblem Hessian pieces. For quadratic
// objectives the whole Hessian P + rho A^T A + rho G^T G is factored once.
class HessianCache {
 public:
  HessianCache(const ProblemSpec& p, double rho, HessianStrategy strategy = {});

  // Factorization of the augmented-Lagrangian Hessian at x.
  std::shared_ptr<const Factorization> FactorAt(std::span<const double> x);
  // rho (A^T A + G^T G)
  const DenseMatrix& penalty_gram() const noexcept { return penalty_gram_; }
  std::size_t factorizations() const noexcept { return factorizations_; }
  double factor_seconds() const noexcept { return factor_seconds_; }

 private:
  const ProblemSpec* problem_;
  HessianStrategy strategy_;
  DenseMatrix penalty_gram_;
  std::shared_ptr<const Factorization> constant_;
  std::size_t factorizations_ = 0;
  double factor_seconds_ = 0.0;
};

struct PrimalUpdateResult {
  Vector x;
  std::shared_ptr<const Factorization> factorization;
  std::size_t newton_iters = 0;
};

// argmin_x of the augmented Lagrangian at (s, lambda, nu). Quadratic
// objectives take one linear solve; others run damped Newton with Armijo
// backtracking warm-started at st.x. The returned factorization is the
// Hessian at the returned x.
PrimalUpdateResult PrimalUpdate(const ProblemSpec& p, const AdmmState& st,
                                const SolverConfig& cfg, HessianCache& cache);
PrimalUpdateResult PrimalUpdate(const ProblemSpec& p, const AdmmState& st,
                                const SolverConfig& cfg);

// s = max(0, -nu / rho - (G x_new - h))
Vector SlackUpdate(const AdmmState& st, const DenseMatrix& G, std::span<const double> h,
                   std::span<const double> x_new, const SolverConfig& cfg);

// lambda + rho (A x_new - b), nu + rho (G x_new + s_new - h)
std::pair<Vector, Vector> DualUpdate(const AdmmState& st, const DenseMatrix& A,
                                     std::span<const double> b, const DenseMatrix& G,
                                     std::span<const double> h,
                                     std::span<const double> x_new,
                                     std::span<const double> s_new,
                                     const SolverConfig& cfg);

struct ForwardReport {
  AdmmState state;
  bool converged = false;
  std::vector<double> step_norms;
  std::vector<double> eq_residuals;    // ||A x - b||
  std::vector<double> ineq_residuals;  // ||G x + s - h||
  std::vector<double> dual_residuals;  // rho ||G^T (s_k+1 - s_k)||, diagnostic only
  std::shared_ptr<const Factorization> hessian_factorization;
  std::size_t hessian_factorizations = 0;
  std::size_t newton_iters = 0;
  double factor_ms = 0.0;
  double forward_ms = 0.0;
};

// One outer iteration at a time, for callers that interleave their own
// work (the Jacobian recursion) with the forward updates.
class AdmmIterator {
 public:
  AdmmIterator(const ProblemSpec& p, const SolverConfig& cfg,
               HessianStrategy strategy = {});

  // Advances to k+1 and returns the relative step norm of x.
  double Step();
  // Stopping rule for the current iterate given the last step norm.
  bool Converged(double step) const;

  const AdmmState& state() const noexcept { return report_.state; }
  const AdmmState& previous() const noexcept { return previous_; }
  const Factorization& factorization() const { return *report_.hessian_factorization; }
  const HessianCache& cache() const noexcept { return cache_; }
  const ProblemSpec& problem() const noexcept { return *problem_; }
  const SolverConfig& config() const noexcept { return cfg_; }

  ForwardReport& report() noexcept { return report_; }
  ForwardReport Finish(bool converged) &&;

 private:
  const ProblemSpec* problem_;
  SolverConfig cfg_;
  HessianCache cache_;
  AdmmState previous_;
  ForwardReport report_;
};

// Runs until the stopping rule holds or the iteration limit is reached; a
// non-converged run is reported, not thrown.
ForwardReport AdmmSolve(const ProblemSpec& p, const SolverConfig& cfg,
                        HessianStrategy strategy = {});

}  // namespace altdiff
