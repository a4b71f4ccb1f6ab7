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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "altdiff/backward.hpp"
#include "altdiff/bench.hpp"
#include "altdiff/e2e.hpp"
#include "altdiff/error.hpp"
#include "altdiff/numerics/kernels.hpp"
#include "altdiff/numerics/linalg.hpp"
#include "altdiff/problem_io.hpp"
#include "altdiff/reference.hpp"

namespace {

using namespace altdiff;

// Writes to `path`, or stdout when empty.
void Emit(const bench::CsvTable& table, const std::string& path) {
  if (path.empty()) {
    bench::WriteCsv(std::cout, table);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot open " + path);
  bench::WriteCsv(out, table);
  std::cerr << "wrote " << table.rows.size() << " rows to " << path << "\n";
}

void PrintMatrix(const char* title, const DenseMatrix& m) {
  std::printf("%s (%zu x %zu)\n", title, m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) std::printf(" % .6e", m(r, c));
    std::printf("\n");
  }
}

double MaxAbsDiff(const DenseMatrix& a, const DenseMatrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

ParamSelector SelectorFromFlag(const std::string& s) {
  if (s == "q") return LinearCost{};
  if (s == "b") return EqRhs{};
  if (s == "h") return IneqRhs{};
  throw Error(ErrorCode::kInvalidArgument, "--sel must be q, b or h");
}

struct QpOpts {
  std::vector<std::size_t> sizes = {50, 100, 200, 400};
  std::uint64_t seed = 0;
  double eps = 1e-3;
  double rho = 1.0;
  std::string layer = "qp";
  int repeats = 5;
  bool parallel = false;
  std::string out;
};

int BenchQp(const QpOpts& o) {
  std::vector<bench::BenchCase> cases;
  for (std::size_t n : o.sizes) {
    bench::BenchCase c;
    c.layer = bench::ParseLayerType(o.layer);
    c.n = n;
    c.m_ineq = std::max<std::size_t>(1, 2 * n / 5);
    c.p = std::max<std::size_t>(1, n / 5);
    c.seed = o.seed;
    c.eps = o.eps;
    c.rho = o.rho;
    c.name = o.layer + "-" + std::to_string(n);
    cases.push_back(c);
  }
  Emit(bench::RecordsToCsv(bench::RunCases(cases, o.repeats, o.parallel)), o.out);
  return 0;
}

struct TruncOpts {
  std::string layer = "qp";
  std::size_t n = 50;
  std::uint64_t seed = 0;
  std::vector<double> eps_list = {1e-1, 1e-2, 1e-3};
  int repeats = 5;
  std::string out;
};

int BenchTruncation(const TruncOpts& o) {
  bench::BenchCase c;
  c.layer = bench::ParseLayerType(o.layer);
  c.n = o.n;
  c.m_ineq = std::max<std::size_t>(1, 2 * o.n / 5);
  c.p = std::max<std::size_t>(1, o.n / 5);
  c.seed = o.seed;
  c.name = o.layer + "-" + std::to_string(o.n);
  Emit(bench::TruncationToCsv(bench::TruncationReport(c, o.eps_list, o.repeats)), o.out);
  return 0;
}

struct ScalingOpts {
  std::vector<std::size_t> sizes = {100, 200};
  std::uint64_t seed = 7;
  double eps = 1e-3;
  int repeats = 5;
  std::string out;
};

int BenchScaling(const ScalingOpts& o) {
  std::vector<std::array<std::size_t, 3>> sizes;
  for (std::size_t n : o.sizes) sizes.push_back({n, std::max<std::size_t>(1, 2 * n / 5), 10});
  Emit(bench::ScalingToCsv(bench::ScalingSweep(sizes, o.seed, o.eps, o.repeats)), o.out);
  return 0;
}

struct EnergyOpts {
  std::size_t epochs = 10;
  std::vector<double> tolerances = {1e-1, 1e-2, 1e-3};
  std::size_t days = 30;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  double ramp = 20.0;
  std::string out;
};

int DemoEnergy(const EnergyOpts& o) {
  e2e::TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.seed = o.seed;
  cfg.lr = o.lr;
  cfg.ramp = o.ramp;
  const auto data = e2e::SynthDemand(o.seed, o.days);
  const auto log = e2e::Train(data, cfg, o.tolerances);
  int status = 0;
  for (const auto& row : log) {
    if (!row.error.empty()) {
      std::cerr << "tolerance " << row.tolerance << " epoch " << row.epoch
                << " aborted: " << row.error << "\n";
      status = 1;
    }
  }
  if (o.out.empty()) {
    e2e::WriteTrainLog(std::cout, log);
  } else {
    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot open " + o.out);
    e2e::WriteTrainLog(out, log);
  }
  return status;
}

struct CheckOpts {
  std::string problem;
  std::string sel = "b";
  bool fd = false;
  double eps = 1e-8;
  double rho = 1.0;
};

int Check(const CheckOpts& o) {
  const ProblemSpec p = LoadProblem(o.problem);
  const ParamSelector sel = SelectorFromFlag(o.sel);
  SolverConfig cfg;
  cfg.eps = o.eps;
  cfg.rho = o.rho;
  const DiffReport r = Differentiate(p, sel, cfg);
  std::printf("alt-diff: %zu iterations, converged %s%s\n", r.forward.state.k,
              r.forward.converged ? "yes" : "no",
              r.weakly_active_warning ? ", weakly active constraint present" : "");
  PrintMatrix("alt-diff Jacobian", r.jac.Jx);
  double worst = 0.0;
  try {
    const reference::KktPoint kp = reference::SolveKkt(p, cfg);
    const DenseMatrix kkt = reference::ImplicitDiffSolve(p, kp.x, kp.lambda, kp.nu, sel);
    PrintMatrix("KKT Jacobian", kkt);
    const double d = MaxAbsDiff(r.jac.Jx, kkt);
    std::printf("max |alt-diff - KKT| = %.3e\n", d);
    worst = std::max(worst, d);
  } catch (const Error& e) {
    std::printf("KKT reference unavailable: %s\n", e.what());
  }
  if (o.fd) {
    const DenseMatrix fd = reference::FiniteDiffJacobian(p, sel, cfg);
    PrintMatrix("finite-difference Jacobian", fd);
    const double d = MaxAbsDiff(r.jac.Jx, fd);
    std::printf("max |alt-diff - finite difference| = %.3e\n", d);
    worst = std::max(worst, d);
  }
  std::printf("max discrepancy = %.3e\n", worst);
  return 0;
}

struct GenOpts {
  std::size_t n = 10;
  std::size_t m_ineq = 4;
  std::size_t p = 2;
  std::uint64_t seed = 0;
  std::string out;
};

int Gen(const GenOpts& o) {
  const ProblemSpec p = bench::GenRandomQp(o.n, o.m_ineq, o.p, o.seed);
  if (o.out.empty()) {
    std::cout << ProblemToJson(p) << "\n";
  } else {
    SaveProblem(p, o.out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"altdiff: differentiable optimization layers by alternating differentiation"};
  app.require_subcommand(1);
  bool scalar = false;
  app.add_flag("--scalar", scalar, "Use the scalar kernels instead of AVX2");

  auto* bench_cmd = app.add_subcommand("bench", "Benchmarks");
  bench_cmd->require_subcommand(1);

  QpOpts qp;
  auto* qp_cmd = bench_cmd->add_subcommand("qp", "Alt-Diff vs KKT reference, one row per size");
  qp_cmd->add_option("--sizes", qp.sizes, "Variable counts n (m_ineq = 0.4 n, p = 0.2 n)")
      ->delimiter(',');
  qp_cmd->add_option("--seed", qp.seed);
  qp_cmd->add_option("--eps", qp.eps);
  qp_cmd->add_option("--rho", qp.rho);
  qp_cmd->add_option("--layer", qp.layer, "qp | sparsemax | softmax");
  qp_cmd->add_option("--repeats", qp.repeats);
  qp_cmd->add_flag("--parallel", qp.parallel, "Run cases concurrently (timings unreliable)");
  qp_cmd->add_option("--out", qp.out, "CSV path (default stdout)");

  TruncOpts tr;
  auto* tr_cmd = bench_cmd->add_subcommand("truncation", "Error and time per tolerance");
  tr_cmd->add_option("--case", tr.layer, "qp | sparsemax | softmax");
  tr_cmd->add_option("--n", tr.n);
  tr_cmd->add_option("--seed", tr.seed);
  tr_cmd->add_option("--eps-list", tr.eps_list, "Descending tolerances")->delimiter(',');
  tr_cmd->add_option("--repeats", tr.repeats);
  tr_cmd->add_option("--out", tr.out);

  ScalingOpts sc;
  auto* sc_cmd = bench_cmd->add_subcommand("scaling", "Factorization and per-iteration timings");
  sc_cmd->add_option("--sizes", sc.sizes, "Ascending n (m_ineq = 0.4 n, p = 10)")
      ->delimiter(',');
  sc_cmd->add_option("--seed", sc.seed);
  sc_cmd->add_option("--eps", sc.eps);
  sc_cmd->add_option("--repeats", sc.repeats);
  sc_cmd->add_option("--out", sc.out);

  auto* demo_cmd = app.add_subcommand("demo", "Demonstrations");
  demo_cmd->require_subcommand(1);
  EnergyOpts en;
  auto* en_cmd = demo_cmd->add_subcommand("energy", "Predict-then-optimize energy scheduling");
  en_cmd->add_option("--epochs", en.epochs);
  en_cmd->add_option("--tolerances", en.tolerances)->delimiter(',');
  en_cmd->add_option("--days", en.days);
  en_cmd->add_option("--seed", en.seed);
  en_cmd->add_option("--lr", en.lr);
  en_cmd->add_option("--ramp", en.ramp);
  en_cmd->add_option("--out", en.out, "CSV training log (default stdout)");

  CheckOpts ck;
  auto* ck_cmd = app.add_subcommand("check", "Compare Jacobians on a problem file");
  ck_cmd->add_option("--problem", ck.problem)->required()->check(CLI::ExistingFile);
  ck_cmd->add_option("--sel", ck.sel, "q | b | h")->check(CLI::IsMember({"q", "b", "h"}));
  ck_cmd->add_flag("--fd", ck.fd, "Also run central finite differences");
  ck_cmd->add_option("--eps", ck.eps);
  ck_cmd->add_option("--rho", ck.rho);

  GenOpts gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a seeded random QP as JSON");
  gen_cmd->add_option("--n", gen.n);
  gen_cmd->add_option("--m-ineq", gen.m_ineq);
  gen_cmd->add_option("--p", gen.p);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out", gen.out);

  CLI11_PARSE(app, argc, argv);
  if (scalar) kernels::SetActive(kernels::Scalar());

  try {
    if (*qp_cmd) return BenchQp(qp);
    if (*tr_cmd) return BenchTruncation(tr);
    if (*sc_cmd) return BenchScaling(sc);
    if (*en_cmd) return DemoEnergy(en);
    if (*ck_cmd) return Check(ck);
    if (*gen_cmd) return Gen(gen);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}
