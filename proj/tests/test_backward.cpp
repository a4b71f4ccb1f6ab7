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


#include <cmath>
#include <vector>

#include "altdiff/backward.hpp"
#include "altdiff/bench.hpp"
#include "altdiff/error.hpp"
#include "altdiff/numerics/linalg.hpp"
#include "altdiff/reference.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace altdiff;
using namespace altdiff::testing;

namespace {

JacobianState ZeroFor(const ProblemSpec& p, std::size_t cols) {
  return JacobianState::Zero(p.n, p.ineq_count(), p.eq_count(), cols);
}

double Rel(const DenseMatrix& a, const DenseMatrix& b) {
  return FrobeniusDistance(a, b) / std::max(FrobeniusNorm(b), 1e-300);
}

}  // namespace

TEST_CASE("mixed partial: equality right-hand side") {
  const ProblemSpec p = EqualityToy(1.0);
  const JacobianState jac = ZeroFor(p, 1);
  const AdmmState prev = InitialState(p);
  const DenseMatrix m = MixedPartial(p, EqRhs{}, prev, jac, Vector{0.3}, 1.0);
  CHECK(m == DenseMatrix{{-1.0}});
}

TEST_CASE("mixed partial: linear cost without constraints is the identity") {
  const ProblemSpec p = MakeQp(DenseMatrix::Identity(3), Vector(3, 0.0), {}, {}, {}, {});
  const DenseMatrix m = MixedPartial(p, LinearCost{}, InitialState(p), ZeroFor(p, 3),
                                     Vector{1.0, 2.0, 3.0}, 1.0);
  CHECK(m == DenseMatrix::Identity(3));
}

TEST_CASE("mixed partial: inequality right-hand side") {
  const ProblemSpec p = MakeQp({{1.0}}, {0.0}, {}, {}, {{1.0}}, {0.0});
  const DenseMatrix m = MixedPartial(p, IneqRhs{}, InitialState(p), ZeroFor(p, 1),
                                     Vector{0.0}, 2.0);
  CHECK(m == DenseMatrix{{-2.0}});
}

TEST_CASE("mixed partial: shape errors") {
  const ProblemSpec p = EqualityToy(1.0);
  CHECK_THROWS_AS(MixedPartial(p, EqRhs{}, InitialState(p), ZeroFor(p, 2), Vector{0.0}, 1.0),
                  Error);
  CHECK_THROWS_AS(MixedPartial(p, EqRhs{}, InitialState(p), ZeroFor(p, 1), Vector{0.0, 1.0}, 1.0),
                  Error);
}

TEST_CASE("primal Jacobian update") {
  // H = 1 + rho A^T A = 2
  const Factorization two = Factorize(DenseMatrix{{2.0}}, true);
  CHECK(PrimalJacobianUpdate(two, DenseMatrix{{-1.0}})(0, 0) ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(PrimalJacobianUpdate(two, DenseMatrix{{0.0}})(0, 0) == 0.0);
  const DenseMatrix jx = PrimalJacobianUpdate(
      Factorize(DenseMatrix::Diagonal(Vector{2.0, 4.0}), true), DenseMatrix{{2.0}, {4.0}});
  CHECK(jx(0, 0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(jx(1, 0) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("slack Jacobian update") {
  SolverConfig cfg;
  const DenseMatrix G{{1.0}};
  CHECK(SlackJacobianUpdate(Vector{0.0}, DenseMatrix{{5.0}}, DenseMatrix{{3.0}}, G,
                            DenseMatrix{{1.0}}, cfg) == DenseMatrix{{0.0}});
  CHECK(SlackJacobianUpdate(Vector{2.0}, DenseMatrix{{0.0}}, DenseMatrix{{0.5}}, G,
                            DenseMatrix{}, cfg) == DenseMatrix{{-0.5}});
  cfg.rho = 2.0;
  CHECK(SlackJacobianUpdate(Vector{1.0}, DenseMatrix{{2.0}}, DenseMatrix{{0.0}}, G,
                            DenseMatrix{{1.0}}, cfg) == DenseMatrix{{0.0}});
}

TEST_CASE("dual Jacobian update") {
  SolverConfig cfg;
  const ProblemSpec eq = EqualityToy(1.0);
  // A Jx = db/dtheta: fixed point
  auto [l0, n0] = DualJacobianUpdate(eq, EqRhs{}, DenseMatrix{{0.3}}, DenseMatrix(0, 1),
                                     DenseMatrix{{1.0}}, DenseMatrix(0, 1), Vector{1.0}, cfg);
  CHECK(l0 == DenseMatrix{{0.3}});
  auto [l1, n1] = DualJacobianUpdate(eq, EqRhs{}, DenseMatrix{{0.0}}, DenseMatrix(0, 1),
                                     DenseMatrix{{0.5}}, DenseMatrix(0, 1), Vector{1.0}, cfg);
  CHECK(l1 == DenseMatrix{{-0.5}});

  // G Jx + Js - dh/dtheta = 1 + 0.25 - 1
  const ProblemSpec in = MakeQp({{1.0}}, {0.0}, {}, {}, {{1.0}}, {0.0});
  cfg.rho = 2.0;
  auto [l2, n2] = DualJacobianUpdate(in, IneqRhs{}, DenseMatrix(0, 1), DenseMatrix{{0.0}},
                                     DenseMatrix{{1.0}}, DenseMatrix{{0.25}}, Vector{0.0}, cfg);
  CHECK(n2 == DenseMatrix{{0.5}});
}

TEST_CASE("differentiate: equality toy against x*(b) = b") {
  const DiffReport r = Differentiate(EqualityToy(1.0), EqRhs{}, SolverConfig{});
  CHECK(r.forward.converged);
  CHECK(r.jac.Jx(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("differentiate: inactive constraint gives zero") {
  const DiffReport r = Differentiate(InactiveToy(), IneqRhs{}, SolverConfig{});
  CHECK(std::abs(r.jac.Jx(0, 0)) <= 1e-6);
  CHECK_FALSE(r.weakly_active_warning);
}

TEST_CASE("differentiate: active lower bound against x*(h) = -h") {
  const DiffReport r = Differentiate(ActiveToy(), IneqRhs{}, SolverConfig{});
  CHECK(r.jac.Jx(0, 0) == doctest::Approx(-1.0).epsilon(1e-6));
  const DenseMatrix kkt = reference::ImplicitDiffSolve(ActiveToy(), r.forward.state.x,
                                                       r.forward.state.lambda,
                                                       r.forward.state.nu, IneqRhs{});
  CHECK(r.jac.Jx(0, 0) == doctest::Approx(kkt(0, 0)).epsilon(1e-6));
}

TEST_CASE("differentiate: report shapes follow the selector") {
  const ProblemSpec p = bench::GenRandomQp(8, 5, 3, 2);
  const ParamSelector sels[] = {LinearCost{}, EqRhs{}, IneqRhs{}, Direction{}};
  for (const ParamSelector& sel : sels) {
    const DiffReport r = Differentiate(p, sel, SolverConfig{});
    const std::size_t cols = ThetaDim(p, sel);
    CHECK(r.jac.Jx.rows() == 8);
    CHECK(r.jac.Jx.cols() == cols);
    CHECK(r.jac.Js.rows() == 5);
    CHECK(r.jac.Jlambda.rows() == 3);
    CHECK(r.jac.Jnu.cols() == cols);
    CHECK(r.jac_step_norms.size() == r.forward.state.k);
    CHECK(AllFinite(r.jac.Jx.entries()));
  }
}

TEST_CASE("truncated differentiate: singleton equals a plain run") {
  const ProblemSpec p = bench::GenRandomQp(10, 4, 2, 5);
  SolverConfig cfg;
  const double eps[] = {1e-3};
  const auto runs = TruncatedDifferentiate(p, EqRhs{}, cfg, eps);
  cfg.eps = 1e-3;
  const DiffReport plain = Differentiate(p, EqRhs{}, cfg);
  REQUIRE(runs.size() == 1);
  CHECK(runs[0].report.jac.Jx == plain.jac.Jx);
  CHECK(runs[0].x_error == 0.0);
  CHECK(runs[0].jac_error == 0.0);
}

TEST_CASE("truncated differentiate: iterations grow as eps tightens") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const ProblemSpec p = bench::GenRandomQp(30, 12, 6, seed);
    const double eps[] = {1e-1, 1e-2, 1e-3};
    const auto runs = TruncatedDifferentiate(p, EqRhs{}, SolverConfig{}, eps);
    CHECK(runs[0].report.forward.state.k <= runs[1].report.forward.state.k);
    CHECK(runs[1].report.forward.state.k <= runs[2].report.forward.state.k);
  }
}

TEST_CASE("truncated differentiate: active toy approaches -1") {
  const double eps[] = {1e-1, 1e-3};
  const auto runs = TruncatedDifferentiate(ActiveToy(), IneqRhs{}, SolverConfig{}, eps);
  CHECK(std::abs(runs[0].report.jac.Jx(0, 0) + 1.0) <= 1e-1);
  CHECK(std::abs(runs[1].report.jac.Jx(0, 0) + 1.0) <= 1e-3);
}

TEST_CASE("truncated differentiate: eps list validation") {
  const double bad[] = {1e-3, 1e-2};
  CHECK_THROWS_AS(TruncatedDifferentiate(ActiveToy(), IneqRhs{}, SolverConfig{}, bad), Error);
  CHECK_THROWS_AS(
      TruncatedDifferentiate(ActiveToy(), IneqRhs{}, SolverConfig{}, std::span<const double>{}),
      Error);
}

TEST_CASE("vector-Jacobian product") {
  DiffReport r;
  r.jac.Jx = DenseMatrix::Identity(2);
  CHECK(Vjp(r, Vector{0.0, 0.0}) == Vector{0.0, 0.0});
  CHECK(Vjp(r, Vector{1.0, 2.0}) == Vector{1.0, 2.0});
  r.jac.Jx = DenseMatrix{{0.5}};
  CHECK(Vjp(r, Vector{2.0}) == Vector{1.0});
  CHECK_THROWS_AS(Vjp(r, Vector{1.0, 1.0}), Error);
}

TEST_CASE("property: a single Jacobian state is alive during the recursion") {
  const ProblemSpec p = bench::GenRandomQp(20, 8, 4, 1);
  const std::size_t base = JacobianState::LiveCount();
  JacobianState::ResetPeak();
  std::size_t peak_in_loop = 0;
  DiffOptions opts;
  opts.observer = [&](const AdmmState&, const JacobianState&) {
    peak_in_loop = std::max(peak_in_loop, JacobianState::LiveCount());
  };
  const DiffReport r = Differentiate(p, EqRhs{}, SolverConfig{}, opts);
  CHECK(r.forward.state.k > 10);
  CHECK(peak_in_loop == base + 1);
  CHECK(JacobianState::PeakCount() == base + 1);
}

TEST_CASE("property: the backward pass reuses the forward factorization") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const ProblemSpec p = bench::GenRandomQp(15, 6, 3, seed);
    const std::uint64_t before = FactorizationCount();
    const DiffReport r = Differentiate(p, IneqRhs{}, SolverConfig{});
    CHECK(FactorizationCount() - before == 1);
    CHECK(r.backward_factorizations == 0);
    CHECK(r.forward.hessian_factorizations == 1);
  }
}

TEST_CASE("property: Jacobians converge to the implicit KKT Jacobian") {
  SolverConfig cfg;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const ProblemSpec p = bench::GenRandomQp(30, 12, 6, seed);
    const reference::KktPoint ref = reference::SolveKkt(p);
    const ParamSelector sels[] = {LinearCost{}, EqRhs{}, IneqRhs{}};
    for (const ParamSelector& sel : sels) {
      CAPTURE(seed);
      CAPTURE(SelectorName(sel));
      const DiffReport r = Differentiate(p, sel, cfg);
      REQUIRE(r.forward.converged);
      const DenseMatrix kkt = reference::ImplicitDiffSolve(p, ref.x, ref.lambda, ref.nu, sel);
      CHECK(Rel(r.jac.Jx, kkt) <= 1e-3);
    }
  }
}

TEST_CASE("property: fixed-point identities of the equality block") {
  SolverConfig cfg;
  cfg.eps = 1e-8;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const ProblemSpec p = bench::GenRandomQp(25, 10, 5, seed);
    const DenseMatrix& A = p.constraints.A;
    const double bound = 1e-4 * (1.0 + FrobeniusNorm(A));
    const DiffReport eq = Differentiate(p, EqRhs{}, cfg);
    CHECK(FrobeniusDistance(Matmul(A, eq.jac.Jx), DenseMatrix::Identity(5)) <= bound);
    const DiffReport lc = Differentiate(p, LinearCost{}, cfg);
    CHECK(FrobeniusNorm(Matmul(A, lc.jac.Jx)) <= bound);
  }
}

TEST_CASE("property: Direction mode contracts the full Jacobian") {
  SolverConfig cfg;
  cfg.eps = 1e-8;
  const ProblemSpec p = bench::GenRandomQp(12, 6, 3, 8);
  Direction d;
  d.dq = RandomVector(12, 1);
  d.db = RandomVector(3, 2);
  d.dh = RandomVector(6, 3);
  const DenseMatrix want = Add(
      Add(Matmul(Differentiate(p, LinearCost{}, cfg).jac.Jx, DenseMatrix::Column(d.dq)),
          Matmul(Differentiate(p, EqRhs{}, cfg).jac.Jx, DenseMatrix::Column(d.db))),
      Matmul(Differentiate(p, IneqRhs{}, cfg).jac.Jx, DenseMatrix::Column(d.dh)));
  const DenseMatrix got = Differentiate(p, d, cfg).jac.Jx;
  CHECK(Rel(got, want) <= 1e-6);
}

TEST_CASE("property: matrix directions agree with finite differences") {
  SolverConfig cfg;
  cfg.eps = 1e-8;
  const ProblemSpec p = bench::GenRandomQp(10, 5, 3, 12);
  Direction d;
  const DenseMatrix m = RandomMatrix(10, 10, 4);
  d.dP = Add(m, Transpose(m));
  d.dA = RandomMatrix(3, 10, 5);
  d.dG = RandomMatrix(5, 10, 6);
  const DiffReport r = Differentiate(p, d, cfg);
  REQUIRE_FALSE(r.weakly_active_warning);
  const DenseMatrix fd = reference::FiniteDiffJacobian(p, d, cfg);
  CHECK(Rel(r.jac.Jx, fd) <= 1e-4);
  const reference::KktPoint ref = reference::SolveKkt(p);
  CHECK(Rel(reference::ImplicitDiffSolve(p, ref.x, ref.lambda, ref.nu, d), fd) <= 1e-4);
}

TEST_CASE("weakly active constraints raise the warning") {
  bench::BenchCase c;
  c.n = 20;
  c.m_ineq = 8;
  c.p = 4;
  c.force_weak = true;
  SolverConfig cfg;
  cfg.eps = 1e-8;
  const DiffReport r = Differentiate(bench::BuildCaseProblem(c), EqRhs{}, cfg);
  CHECK(r.weakly_active_warning);
}

TEST_CASE("property: differentiate is deterministic") {
  const ProblemSpec p = bench::GenRandomQp(20, 8, 4, 9);
  const DiffReport a = Differentiate(p, IneqRhs{}, SolverConfig{});
  const DiffReport b = Differentiate(p, IneqRhs{}, SolverConfig{});
  CHECK(a.jac.Jx == b.jac.Jx);
  CHECK(a.jac_step_norms == b.jac_step_norms);
}
