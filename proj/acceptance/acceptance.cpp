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

// Acceptance suite: one line per criterion, exit status 1 if any fails.
// Usage: altdiff_acceptance [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "altdiff/backward.hpp"
#include "altdiff/bench.hpp"
#include "altdiff/e2e.hpp"
#include "altdiff/error.hpp"
#include "altdiff/forward.hpp"
#include "altdiff/layers.hpp"
#include "altdiff/numerics/factorization.hpp"
#include "altdiff/numerics/linalg.hpp"
#include "altdiff/reference.hpp"

namespace {

using namespace altdiff;
using Clock = std::chrono::steady_clock;

constexpr int kSuiteSize = 20;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<ProblemSpec> Suite() {
  std::vector<ProblemSpec> out;
  for (int s = 0; s < kSuiteSize; ++s) out.push_back(bench::GenRandomQp(50, 20, 10, s));
  return out;
}

std::vector<ProblemSpec> LayerProblems() {
  std::vector<ProblemSpec> out;
  for (auto type : {bench::LayerType::kSparsemax, bench::LayerType::kSoftmax}) {
    for (int s = 0; s < 5; ++s) {
      bench::BenchCase c;
      c.n = 20;
      c.seed = static_cast<std::uint64_t>(s);
      c.layer = type;
      out.push_back(bench::BuildCaseProblem(c));
    }
  }
  return out;
}

SolverConfig WithEps(double eps) {
  SolverConfig c;
  c.eps = eps;
  return c;
}

// 1. Alt-Diff vs implicit KKT differentiation, db.
Outcome OracleEquivalence() {
  const auto start = Clock::now();
  double worst_cos = 1.0, sum_cos = 0.0, worst_rel = 0.0;
  int below = 0;
  for (const ProblemSpec& p : Suite()) {
    const reference::KktPoint kp = reference::SolveKkt(p);
    const DenseMatrix ref = reference::ImplicitDiffSolve(p, kp.x, kp.lambda, kp.nu, EqRhs{});
    const DiffReport loose = Differentiate(p, EqRhs{}, WithEps(1e-3));
    const double cos = CosineSimilarity(loose.jac.Jx.entries(), ref.entries());
    worst_cos = std::min(worst_cos, cos);
    sum_cos += cos;
    if (cos < 0.999) ++below;
    const DiffReport tight = Differentiate(p, EqRhs{}, WithEps(1e-6));
    worst_rel = std::max(worst_rel, FrobeniusDistance(tight.jac.Jx, ref) / FrobeniusNorm(ref));
  }
  const double secs = Seconds(start);
  Outcome o;
  o.pass = below == 0 && worst_rel <= 1e-3 && secs < 60.0;
  o.detail = "eps=1e-3 cosine worst " + Fmt("%.6f", worst_cos) + " mean " +
             Fmt("%.6f", sum_cos / kSuiteSize) + ", " + std::to_string(below) +
             "/20 below 0.999; eps=1e-6 worst rel Frobenius " + Fmt("%.2e", worst_rel) + "; " +
             Fmt("%.1f s", secs);
  return o;
}

// Worst |a - b| / max(1e-4 |b|, 1e-8) over all entries.
double FdScore(const DenseMatrix& alt, const DenseMatrix& fd) {
  double worst = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const double a = alt.data()[i];
    const double b = fd.data()[i];
    worst = std::max(worst, std::abs(a - b) / std::max(1e-4 * std::abs(b), 1e-8));
  }
  return worst;
}

// 2. Alt-Diff vs central differences.
Outcome FiniteDifferenceAgreement() {
  const auto start = Clock::now();
  const SolverConfig cfg = WithEps(1e-8);
  double worst = 0.0;
  int compared = 0, skipped = 0;
  auto run = [&](const ProblemSpec& p, const ParamSelector& sel) {
    const DiffReport r = Differentiate(p, sel, cfg);
    if (r.weakly_active_warning) {
      ++skipped;
      return;
    }
    worst = std::max(worst, FdScore(r.jac.Jx, reference::FiniteDiffJacobian(p, sel, cfg)));
    ++compared;
  };
  for (const ProblemSpec& p : Suite()) {
    run(p, EqRhs{});
    run(p, LinearCost{});
    run(p, IneqRhs{});
  }
  for (const ProblemSpec& p : LayerProblems()) run(p, LinearCost{});
  const double secs = Seconds(start);
  Outcome o;
  o.pass = worst <= 1.0 && compared > 0 && secs < 120.0;
  o.detail = std::to_string(compared) + " Jacobians (" + std::to_string(skipped) +
             " weakly active skipped), worst error " + Fmt("%.3f", worst) +
             " of tolerance; " + Fmt("%.1f s", secs);
  return o;
}

DenseMatrix ThetaDerivative(const ParamSelector& sel, std::size_t rows, std::size_t theta,
                            bool for_eq) {
  const bool identity = for_eq ? std::holds_alternative<EqRhs>(sel)
                               : std::holds_alternative<IneqRhs>(sel);
  return identity ? DenseMatrix::Identity(rows) : DenseMatrix(rows, theta);
}

// 3. A Jx = db/dtheta and the complementary-slackness derivative conditions.
Outcome FixedPointIdentities() {
  double worst_eq = 0.0, worst_cs = 0.0;
  for (const ProblemSpec& p : Suite()) {
    const Polyhedron& c = p.constraints;
    const double bound = 1e-4 * (1.0 + FrobeniusNorm(c.A));
    for (const ParamSelector& sel :
         std::vector<ParamSelector>{EqRhs{}, LinearCost{}, IneqRhs{}}) {
      const DiffReport r = Differentiate(p, sel, WithEps(1e-8));
      const std::size_t theta = r.jac.Jx.cols();
      const DenseMatrix eq =
          Subtract(Matmul(c.A, r.jac.Jx), ThetaDerivative(sel, c.eq_count(), theta, true));
      worst_eq = std::max(worst_eq, FrobeniusNorm(eq) / bound);
      const DenseMatrix act =
          Subtract(Matmul(c.G, r.jac.Jx), ThetaDerivative(sel, c.ineq_count(), theta, false));
      const AdmmState& st = r.forward.state;
      for (std::size_t i = 0; i < c.ineq_count(); ++i) {
        if (st.s[i] > 1e-6) {
          worst_cs = std::max(worst_cs, Norm2(r.jac.Jnu.row(i)) / 1e-4);
        } else if (std::abs(st.nu[i]) > 1e-6) {
          worst_cs = std::max(worst_cs, Norm2(act.row(i)) / 1e-4);
        }
      }
    }
  }
  Outcome o;
  o.pass = worst_eq <= 1.0 && worst_cs <= 1.0;
  o.detail = "worst ||A Jx - db/dtheta||_F " + Fmt("%.3f", worst_eq) +
             " of bound, worst slackness row " + Fmt("%.3f", worst_cs) + " of 1e-4";
  return o;
}

// 4. Error-ratio growth over the final half, and wall time against eps.
Outcome TruncationBound() {
  double worst_growth = 0.0;
  int non_monotone = 0;
  std::vector<double> eps_list = {1e-1, 1e-2, 1e-3};
  for (int s = 0; s < kSuiteSize; ++s) {
    const ProblemSpec p = bench::GenRandomQp(50, 20, 10, static_cast<std::uint64_t>(s));
    const reference::KktPoint kp = reference::SolveKkt(p);
    const DenseMatrix ref = reference::ImplicitDiffSolve(p, kp.x, kp.lambda, kp.nu, EqRhs{});
    const std::vector<double> trace =
        bench::ErrorRatioTrace(p, EqRhs{}, WithEps(1e-6), kp.x, ref);
    const std::size_t half = trace.size() / 2;
    const double peak = *std::max_element(trace.begin() + static_cast<std::ptrdiff_t>(half),
                                          trace.end());
    worst_growth = std::max(worst_growth, peak / trace[half]);

    bench::BenchCase c;
    c.seed = static_cast<std::uint64_t>(s);
    const auto rows = bench::TruncationReport(c, eps_list, 15);
    // rows follow eps_list: loosest first, so times must not decrease.
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i - 1].wall_ms > rows[i].wall_ms) ++non_monotone;
    }
  }
  Outcome o;
  o.pass = worst_growth <= 10.0 && non_monotone == 0;
  o.detail = "worst final-half ratio growth " + Fmt("%.2f", worst_growth) + "x (limit 10x); " +
             std::to_string(non_monotone) + " wall-time inversions across eps {1e-1,1e-2,1e-3}";
  return o;
}

// 5. n = 100 -> 200 timing ratios.
Outcome BackwardScaling() {
  const auto start = Clock::now();
  const auto rows = bench::ScalingSweep({{100, 40, 10}, {200, 80, 10}}, 7, 1e-3, 5);
  const double br = rows.back().backward_ratio.value_or(0.0);
  const double fr = rows.back().factor_ratio.value_or(0.0);
  const double secs = Seconds(start);
  Outcome o;
  o.pass = br >= 2.5 && br <= 6.5 && fr >= 5.0 && fr <= 12.0 && secs < 300.0;
  o.detail = "backward per-iteration ratio " + Fmt("%.2f", br) + " (want [2.5, 6.5]), " +
             "factorization ratio " + Fmt("%.2f", fr) + " (want [5, 12]); " +
             Fmt("%.1f s", secs);
  return o;
}

// 6. One Hessian factorization per quadratic solve, none in the backward pass.
Outcome HessianReuse() {
  int bad = 0, runs = 0;
  auto check = [&](const std::function<DiffReport()>& run) {
    const std::uint64_t before = FactorizationCount();
    const DiffReport r = run();
    const std::uint64_t total = FactorizationCount() - before;
    ++runs;
    if (total != 1 || r.forward.hessian_factorizations != 1 || r.backward_factorizations != 0) {
      ++bad;
    }
  };
  for (const ProblemSpec& p : Suite()) {
    for (const ParamSelector& sel :
         std::vector<ParamSelector>{EqRhs{}, LinearCost{}, IneqRhs{}}) {
      check([&] { return Differentiate(p, sel, WithEps(1e-6)); });
    }
  }
  check([] {
    return layers::SolveAndDiff(layers::SparsemaxLayer{{0.3, 0.9, -0.2}, {1.0, 1.0, 1.0}},
                                LinearCost{}, WithEps(1e-6));
  });
  Outcome o;
  o.pass = bad == 0;
  o.detail = std::to_string(runs - bad) + "/" + std::to_string(runs) +
             " solves with exactly one factorization and none in the backward pass";
  return o;
}

// Bisection on tau: sum clip(y - tau, 0, u) = 1.
Vector CappedSimplexProjection(const Vector& y, const Vector& u) {
  double lo = *std::min_element(y.begin(), y.end()) - 2.0;
  double hi = *std::max_element(y.begin(), y.end()) + 2.0;
  Vector x(y.size());
  for (int it = 0; it < 200; ++it) {
    const double tau = 0.5 * (lo + hi);
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      x[i] = std::clamp(y[i] - tau, 0.0, u[i]);
      sum += x[i];
    }
    (sum > 1.0 ? lo : hi) = tau;
  }
  return x;
}

// 7. Layer solutions and specialized Hessians.
Outcome LayerCorrectness() {
  const SolverConfig cfg = WithEps(1e-9);
  const layers::SparsemaxLayer sm{{2.0, 0.0}, {1.0, 1.0}};
  const Vector sm_x = AdmmSolve(layers::Build(sm), cfg).state.x;
  const double sm_err = Distance2(sm_x, CappedSimplexProjection(sm.y, sm.u));
  const layers::SoftmaxLayer soft{{std::numbers::ln2, 0.0}, {10.0, 10.0}};
  const Vector soft_x = AdmmSolve(layers::Build(soft), cfg).state.x;
  const double soft_err = Distance2(soft_x, Vector{2.0 / 3.0, 1.0 / 3.0});

  double hess_sm = 0.0, hess_qp = 0.0, hess_soft = 0.0, jac_gap = 0.0;
  const double rho = 1.7;
  const layers::SparsemaxLayer sm4{{0.4, -0.3, 1.1, 0.2}, {0.5, 0.6, 0.7, 0.8}};
  {
    const ProblemSpec p = layers::Build(sm4);
    DenseMatrix generic = p.quadratic().P;
    AddScaledInPlace(generic, rho, Add(Gram(p.constraints.A), Gram(p.constraints.G)));
    hess_sm = FrobeniusDistance(layers::SpecializedHessian(sm4, {}, rho), generic);
  }
  {
    const ProblemSpec p = bench::GenRandomQp(12, 6, 3, 5);
    const layers::QuadraticLayer ql{p.quadratic().P, p.quadratic().q, p.constraints};
    DenseMatrix pen = Scaled(Gram(p.constraints.A), rho);
    AddScaledInPlace(pen, rho, Gram(p.constraints.G));
    hess_qp = FrobeniusDistance(layers::SpecializedHessian(ql, {}, rho),
                                Add(p.quadratic().P, pen));
  }
  {
    const layers::SoftmaxLayer s4{{0.1, 0.5, -0.4, 0.2}, {0.6, 0.6, 0.6, 0.6}};
    const Vector x = {0.2, 0.3, 0.1, 0.4};
    const ProblemSpec p = layers::Build(s4);
    DenseMatrix generic = p.ObjectiveHessian(x);
    AddScaledInPlace(generic, rho, Add(Gram(p.constraints.A), Gram(p.constraints.G)));
    hess_soft = FrobeniusDistance(layers::SpecializedHessian(s4, x, rho), generic);
    const DiffReport a = layers::SolveAndDiff(s4, LinearCost{}, WithEps(1e-8));
    const DiffReport b = Differentiate(p, LinearCost{}, WithEps(1e-8));
    jac_gap = FrobeniusDistance(a.jac.Jx, b.jac.Jx) / FrobeniusNorm(b.jac.Jx);
  }
  const DiffReport sa = layers::SolveAndDiff(sm4, LinearCost{}, WithEps(1e-8));
  const DiffReport sb = Differentiate(layers::Build(sm4), LinearCost{}, WithEps(1e-8));
  const bool sm_bits = sa.jac.Jx == sb.jac.Jx;

  Outcome o;
  o.pass = sm_err <= 1e-5 && soft_err <= 1e-5 && hess_sm == 0.0 && hess_qp == 0.0 &&
           hess_soft <= 1e-8 && jac_gap <= 1e-8 && sm_bits;
  o.detail = "sparsemax err " + Fmt("%.1e", sm_err) + ", softmax err " + Fmt("%.1e", soft_err) +
             ", Hessian gaps sparsemax " + Fmt("%.0e", hess_sm) + " quadratic " +
             Fmt("%.0e", hess_qp) + " softmax " + Fmt("%.1e", hess_soft) +
             ", softmax Jacobian gap " + Fmt("%.1e", jac_gap) +
             (sm_bits ? ", sparsemax Jacobian bit-identical" : ", sparsemax Jacobian differs");
  return o;
}

// 8. Energy scheduling training at eps 1e-1 vs 1e-3.
Outcome EndToEnd() {
  const auto start = Clock::now();
  const auto data = e2e::SynthDemand(0, 30);
  const e2e::TrainConfig cfg;
  const std::vector<double> tols = {1e-1, 1e-3};
  const auto log = e2e::Train(data, cfg, tols);
  double final_loose = 0.0, final_tight = 0.0, initial_tight = 0.0;
  bool errors = false;
  for (const auto& row : log) {
    errors = errors || !row.error.empty();
    if (row.epoch == cfg.epochs) (row.tolerance == 1e-1 ? final_loose : final_tight) = row.mean_loss;
    if (row.epoch == 0 && row.tolerance == 1e-3) initial_tight = row.mean_loss;
  }
  const double gap = std::abs(final_loose - final_tight) / final_tight;
  const auto agree = e2e::CompareGradients(data, cfg, 1e-1, 1e-3, 50);
  const double secs = Seconds(start);
  Outcome o;
  o.pass = !errors && gap <= 0.05 && agree.mean_param_cosine >= 0.99 && secs < 600.0;
  o.detail = "final loss " + Fmt("%.2f", final_loose) + " vs " + Fmt("%.2f", final_tight) +
             " (gap " + Fmt("%.2f%%", 100.0 * gap) + ", initial " + Fmt("%.1f", initial_tight) +
             "), mean gradient cosine " + Fmt("%.4f", agree.mean_param_cosine) +
             " over 50 steps; " + Fmt("%.1f s", secs);
  return o;
}

// 9. KKT residual, feasibility and slackness at every converged solve.
Outcome ForwardOptimality() {
  double worst = 0.0;
  int solves = 0, unconverged = 0;
  auto check = [&](const ProblemSpec& p, double eps) {
    const ForwardReport r = AdmmSolve(p, WithEps(eps));
    if (!r.converged) {
      ++unconverged;
      return;
    }
    ++solves;
    const AdmmState& st = r.state;
    const Polyhedron& c = p.constraints;
    const double tol = 10.0 * eps;
    worst = std::max(worst, Norm2(reference::KktResidual(p, st.x, st.lambda, st.nu)) /
                                (tol * (1.0 + Norm2(st.x))));
    if (c.eq_count() > 0) {
      worst = std::max(worst, Distance2(Matvec(c.A, st.x), c.b) / (tol * (1.0 + Norm2(c.b))));
    }
    if (c.ineq_count() > 0) {
      worst = std::max(worst, Distance2(Add(Matvec(c.G, st.x), st.s), c.h) /
                                  (tol * (1.0 + Norm2(c.h))));
      const double min_nu = *std::min_element(st.nu.begin(), st.nu.end());
      worst = std::max(worst, -min_nu / tol);
      worst = std::max(worst, std::abs(Dot(st.nu, st.s)) /
                                  (tol * (1.0 + Norm2(st.nu) * Norm2(st.s))));
    }
  };
  for (double eps : {1e-3, 1e-6}) {
    for (const ProblemSpec& p : Suite()) check(p, eps);
    for (const ProblemSpec& p : LayerProblems()) check(p, eps);
  }
  Outcome o;
  o.pass = worst <= 1.0 && unconverged == 0;
  o.detail = std::to_string(solves) + " converged solves (" + std::to_string(unconverged) +
             " unconverged), worst " + Fmt("%.3f", worst) + " of bound";
  return o;
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "oracle equivalence", OracleEquivalence},
      {2, "finite-difference agreement", FiniteDifferenceAgreement},
      {3, "fixed-point identities", FixedPointIdentities},
      {4, "truncation bound", TruncationBound},
      {5, "backward quadratic scaling", BackwardScaling},
      {6, "Hessian reuse", HessianReuse},
      {7, "layer correctness", LayerCorrectness},
      {8, "end-to-end truncation insensitivity", EndToEnd},
      {9, "forward optimality", ForwardOptimality},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
