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

#include "altdiff/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <future>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <system_error>

#include "altdiff/error.hpp"
#include "altdiff/layers.hpp"
#include "altdiff/numerics/linalg.hpp"
#include "altdiff/reference.hpp"

namespace altdiff::bench {
namespace {

using Clock = std::chrono::steady_clock;

double Median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

DenseMatrix NormalMatrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

Vector NormalVector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

// Moves h_i onto an inactive constraint so that it becomes weakly active at
// the unchanged optimum.
void ForceWeakActivity(ProblemSpec& p) {
  const reference::KktPoint kp = reference::SolveKkt(p);
  const Vector gx = Matvec(p.constraints.G, kp.x);
  std::size_t best = p.ineq_count();
  double best_gap = 0.0;
  for (std::size_t i = 0; i < p.ineq_count(); ++i) {
    const double gap = p.constraints.h[i] - gx[i];
    if (kp.nu[i] == 0.0 && gap > best_gap) {
      best = i;
      best_gap = gap;
    }
  }
  if (best == p.ineq_count()) {
    throw Error(ErrorCode::kInvalidArgument, "no inactive constraint to degrade");
  }
  p.constraints.h[best] = gx[best];
}

std::string Quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string Optional(const std::optional<double>& v) {
  return v ? FormatDouble(*v) : std::string();
}

std::string Flag(bool b) { return b ? "1" : "0"; }

}  // namespace

std::string LayerTypeName(LayerType t) {
  switch (t) {
    case LayerType::kDenseQp: return "qp";
    case LayerType::kSparsemax: return "sparsemax";
    case LayerType::kSoftmax: return "softmax";
  }
  return "?";
}

LayerType ParseLayerType(const std::string& name) {
  if (name == "qp") return LayerType::kDenseQp;
  if (name == "sparsemax") return LayerType::kSparsemax;
  if (name == "softmax") return LayerType::kSoftmax;
  throw Error(ErrorCode::kInvalidArgument, "unknown layer type '" + name + "'");
}

void CheckCase(const BenchCase& c) {
  if (c.n == 0) throw Error(ErrorCode::kInvalidArgument, "n must be positive");
  if (c.layer == LayerType::kDenseQp) {
    if (c.m_ineq == 0 || c.p == 0) {
      throw Error(ErrorCode::kInvalidArgument, "m_ineq and p must be positive");
    }
    if (c.p > c.n) throw Error(ErrorCode::kInvalidArgument, "p must not exceed n");
  }
  if (!(c.eps > 0.0) || !(c.rho > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "eps and rho must be positive");
  }
}

GeneratedQp GenRandomQpWithPoint(std::size_t n, std::size_t m_ineq, std::size_t p,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const DenseMatrix m = NormalMatrix(n, n, rng);
  DenseMatrix P = Gram(m);
  for (std::size_t i = 0; i < n; ++i) P(i, i) += 0.1;
  // Gram rounds each entry independently; copy the upper triangle so P is
  // exactly symmetric.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) P(i, j) = P(j, i);
  }
  Vector q = NormalVector(n, rng);
  DenseMatrix A = NormalMatrix(p, n, rng);
  DenseMatrix G = NormalMatrix(m_ineq, n, rng);
  Vector z = NormalVector(n, rng);
  const Vector w = NormalVector(m_ineq, rng);
  Vector b = Matvec(A, z);
  Vector h = Matvec(G, z);
  for (std::size_t i = 0; i < m_ineq; ++i) h[i] += std::abs(w[i]) + 0.1;
  if (p == 0) A = DenseMatrix(0, n);
  if (m_ineq == 0) G = DenseMatrix(0, n);
  ProblemSpec problem{n, QuadraticObjective{std::move(P), std::move(q)},
                   Polyhedron{std::move(A), std::move(b), std::move(G), std::move(h)}};
  return {std::move(problem), std::move(z)};
}

ProblemSpec GenRandomQp(std::size_t n, std::size_t m_ineq, std::size_t p,
                        std::uint64_t seed) {
  return GenRandomQpWithPoint(n, m_ineq, p, seed).problem;
}

ProblemSpec BuildCaseProblem(const BenchCase& c) {
  CheckCase(c);
  if (c.layer == LayerType::kDenseQp) {
    ProblemSpec p = GenRandomQp(c.n, c.m_ineq, c.p, c.seed);
    if (c.force_weak) ForceWeakActivity(p);
    return p;
  }
  std::mt19937_64 rng(c.seed);
  Vector y = NormalVector(c.n, rng);
  std::uniform_real_distribution<double> box(0.3, 0.8);
  Vector u(c.n);
  for (double& v : u) v = box(rng);
  if (c.layer == LayerType::kSparsemax) {
    return layers::Build(layers::SparsemaxLayer{std::move(y), std::move(u)});
  }
  return layers::Build(layers::SoftmaxLayer{std::move(y), std::move(u)});
}

ParamSelector CaseSelector(const BenchCase& c) {
  if (c.layer == LayerType::kDenseQp) return EqRhs{};
  return LinearCost{};
}

BenchRecord RunCase(const BenchCase& c, int repeats) {
  BenchRecord rec;
  rec.bench_case = c;
  repeats = std::max(repeats, 1);
  try {
    const ProblemSpec p = BuildCaseProblem(c);
    const ParamSelector sel = CaseSelector(c);
    SolverConfig cfg;
    cfg.eps = c.eps;
    cfg.rho = c.rho;

    std::vector<double> total, factor, forward, backward;
    DiffReport report;
    for (int r = 0; r < repeats; ++r) {
      report = Differentiate(p, sel, cfg);
      const ForwardReport& f = report.forward;
      factor.push_back(f.factor_ms);
      forward.push_back(f.forward_ms);
      backward.push_back(report.backward_ms);
      total.push_back(f.factor_ms + f.forward_ms + report.backward_ms);
    }
    rec.altdiff_ms = Median(total);
    rec.factor_ms = Median(factor);
    rec.iterate_ms = rec.altdiff_ms - rec.factor_ms;
    rec.forward_ms = Median(forward);
    rec.backward_ms = Median(backward);
    rec.iterations = report.forward.state.k;
    rec.altdiff_converged = report.forward.converged;
    rec.weakly_active = report.weakly_active_warning;

    try {
      const reference::KktPoint kp = reference::SolveKkt(p, cfg);
      std::vector<double> kkt;
      DenseMatrix jac_ref;
      for (int r = 0; r < repeats; ++r) {
        const auto start = Clock::now();
        jac_ref = reference::ImplicitDiffSolve(p, kp.x, kp.lambda, kp.nu, sel);
        kkt.push_back(std::chrono::duration<double, std::milli>(Clock::now() - start).count());
      }
      rec.kkt_ms = Median(kkt);
      rec.kkt_ok = true;
      if (!rec.weakly_active) {
        rec.cosine_similarity = CosineSimilarity(report.jac.Jx.entries(), jac_ref.entries());
        const double denom = FrobeniusNorm(jac_ref);
        if (denom > 0.0) rec.relative_error = FrobeniusDistance(report.jac.Jx, jac_ref) / denom;
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kSingularKkt) rec.weakly_active = true;
      rec.error = e.what();
    }
  } catch (const Error& e) {
    rec.error = e.what();
  }
  return rec;
}

std::vector<BenchRecord> RunCases(const std::vector<BenchCase>& cases, int repeats,
                                  bool parallel) {
  std::vector<BenchRecord> out;
  out.reserve(cases.size());
  if (!parallel) {
    for (const BenchCase& c : cases) out.push_back(RunCase(c, repeats));
    return out;
  }
  std::vector<std::future<BenchRecord>> jobs;
  for (const BenchCase& c : cases) {
    jobs.push_back(std::async(std::launch::async, [c, repeats] { return RunCase(c, repeats); }));
  }
  for (auto& j : jobs) {
    out.push_back(j.get());
    out.back().timing_reliable = false;
  }
  return out;
}

std::vector<ScalingRow> ScalingSweep(const std::vector<std::array<std::size_t, 3>>& sizes,
                                     std::uint64_t seed, double eps, int repeats) {
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i][0] < sizes[i - 1][0]) {
      throw Error(ErrorCode::kInvalidArgument, "sizes must be ascending in n");
    }
  }
  repeats = std::max(repeats, 1);
  SolverConfig cfg;
  cfg.eps = eps;
  std::vector<ProblemSpec> problems;
  std::vector<DenseMatrix> hessians;
  for (const auto& [n, m, p_eq] : sizes) {
    problems.push_back(GenRandomQp(n, m, p_eq, seed));
    const ProblemSpec& p = problems.back();
    hessians.push_back(Add(p.quadratic().P, HessianCache(p, cfg.rho).penalty_gram()));
  }
  const std::size_t count = sizes.size();
  std::vector<std::vector<double>> factor(count), fwd(count), bwd(count);
  std::vector<std::size_t> iters(count, 0);

  // Sizes are interleaved round by round so machine-load drift hits all of
  // them alike.
  for (int r = 0; r < repeats; ++r) {
    for (std::size_t i = 0; i < count; ++i) {
      const DiffReport rep = Differentiate(problems[i], EqRhs{}, cfg);
      iters[i] = rep.forward.state.k;
      const double k = static_cast<double>(std::max<std::size_t>(iters[i], 1));
      fwd[i].push_back(rep.forward.forward_ms / k);
      bwd[i].push_back(rep.backward_ms / k);
    }
  }
  // In-solve factor times at these sizes are dominated by cold-cache and
  // first-touch costs; time the kernel on its own, warmed, in batches long
  // enough for the clock.
  std::vector<int> batch(count, 1);
  for (std::size_t i = 0; i < count; ++i) {
    (void)Factorize(hessians[i], true);
    for (;;) {
      const auto start = Clock::now();
      for (int b = 0; b < batch[i]; ++b) (void)Factorize(hessians[i], true);
      if (std::chrono::duration<double, std::milli>(Clock::now() - start).count() >= 2.0 ||
          batch[i] >= 1 << 16) {
        break;
      }
      batch[i] *= 2;
    }
  }
  for (int r = 0; r < std::max(repeats, 21); ++r) {
    for (std::size_t i = 0; i < count; ++i) {
      const auto start = Clock::now();
      for (int b = 0; b < batch[i]; ++b) (void)Factorize(hessians[i], true);
      factor[i].push_back(
          std::chrono::duration<double, std::milli>(Clock::now() - start).count() / batch[i]);
    }
  }

  std::vector<ScalingRow> rows;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& [n, m, p_eq] = sizes[i];
    ScalingRow row{n,           m,          p_eq, iters[i], Median(factor[i]), Median(fwd[i]),
                   Median(bwd[i]), {},       {}};
    if (!rows.empty()) {
      const ScalingRow& prev = rows.back();
      if (prev.factor_ms > 0.0) row.factor_ratio = row.factor_ms / prev.factor_ms;
      if (prev.backward_iter_ms > 0.0) {
        row.backward_ratio = row.backward_iter_ms / prev.backward_iter_ms;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<TruncationRow> TruncationReport(const BenchCase& c,
                                            std::span<const double> eps_list,
                                            int repeats) {
  const ProblemSpec p = BuildCaseProblem(c);
  const ParamSelector sel = CaseSelector(c);
  SolverConfig cfg;
  cfg.rho = c.rho;
  repeats = std::max(repeats, 1);
  std::vector<std::vector<double>> walls(eps_list.size());
  std::vector<TruncatedRun> first;
  for (int r = 0; r < repeats; ++r) {
    std::vector<TruncatedRun> runs = TruncatedDifferentiate(p, sel, cfg, eps_list);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const DiffReport& rep = runs[i].report;
      walls[i].push_back(rep.forward.factor_ms + rep.forward.forward_ms + rep.backward_ms);
    }
    if (r == 0) first = std::move(runs);
  }
  std::vector<TruncationRow> rows;
  for (std::size_t i = 0; i < first.size(); ++i) {
    TruncationRow row;
    row.eps = first[i].eps;
    row.iterations = first[i].report.forward.state.k;
    row.wall_ms = Median(walls[i]);
    row.x_error = first[i].x_error;
    row.jac_error = first[i].jac_error;
    if (row.x_error > 0.0) row.ratio = row.jac_error / row.x_error;
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> ErrorRatioTrace(const ProblemSpec& p, const ParamSelector& sel,
                                    const SolverConfig& cfg, const Vector& x_ref,
                                    const DenseMatrix& jac_ref) {
  std::vector<double> ratios;
  DiffOptions opts;
  opts.observer = [&](const AdmmState& st, const JacobianState& jac) {
    const double dx = Distance2(st.x, x_ref);
    if (dx > 0.0) ratios.push_back(FrobeniusDistance(jac.Jx, jac_ref) / dx);
  };
  Differentiate(p, sel, cfg, opts);
  return ratios;
}

std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double ParseDouble(const std::string& field) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw Error(ErrorCode::kParseError, "not a number: '" + field + "'");
  }
  return v;
}

void WriteCsv(std::ostream& out, const CsvTable& table) {
  auto write_row = [&out](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out << ',';
      out << Quote(row[i]);
    }
    out << "\r\n";
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
}

CsvTable ParseCsv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  char c = 0;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    records.push_back(std::move(row));
    row.clear();
  };
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      if (field_started) throw Error(ErrorCode::kParseError, "stray quote in field");
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      end_row();
    } else if (c == '\n') {
      end_row();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw Error(ErrorCode::kParseError, "unterminated quoted field");
  if (field_started || !row.empty()) end_row();
  if (records.empty()) throw Error(ErrorCode::kParseError, "missing header row");

  CsvTable table;
  table.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != table.header.size()) {
      throw Error(ErrorCode::kParseError,
                  "row " + std::to_string(i) + " has " + std::to_string(records[i].size()) +
                      " fields, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[i]));
  }
  return table;
}

CsvTable RecordsToCsv(const std::vector<BenchRecord>& records) {
  CsvTable t;
  t.header = {"name",          "layer",      "n",           "m_ineq",
              "p",             "seed",       "eps",         "rho",
              "altdiff_ms",    "factor_ms",  "iterate_ms",  "forward_ms",
              "backward_ms",   "kkt_ms",     "cosine_similarity", "relative_error",
              "iterations",    "converged",  "kkt_ok",      "weakly_active",
              "timing_reliable", "error"};
  for (const BenchRecord& r : records) {
    const BenchCase& c = r.bench_case;
    t.rows.push_back({c.name, LayerTypeName(c.layer), std::to_string(c.n),
                      std::to_string(c.m_ineq), std::to_string(c.p), std::to_string(c.seed),
                      FormatDouble(c.eps), FormatDouble(c.rho), FormatDouble(r.altdiff_ms),
                      FormatDouble(r.factor_ms), FormatDouble(r.iterate_ms),
                      FormatDouble(r.forward_ms), FormatDouble(r.backward_ms),
                      FormatDouble(r.kkt_ms), Optional(r.cosine_similarity),
                      Optional(r.relative_error), std::to_string(r.iterations),
                      Flag(r.altdiff_converged), Flag(r.kkt_ok), Flag(r.weakly_active),
                      Flag(r.timing_reliable), r.error});
  }
  return t;
}

CsvTable ScalingToCsv(const std::vector<ScalingRow>& rows) {
  CsvTable t;
  t.header = {"n", "m_ineq", "p", "iterations", "factor_ms", "forward_iter_ms",
              "backward_iter_ms", "factor_ratio", "backward_ratio"};
  for (const ScalingRow& r : rows) {
    t.rows.push_back({std::to_string(r.n), std::to_string(r.m_ineq), std::to_string(r.p),
                      std::to_string(r.iterations), FormatDouble(r.factor_ms),
                      FormatDouble(r.forward_iter_ms), FormatDouble(r.backward_iter_ms),
                      Optional(r.factor_ratio), Optional(r.backward_ratio)});
  }
  return t;
}

CsvTable TruncationToCsv(const std::vector<TruncationRow>& rows) {
  CsvTable t;
  t.header = {"eps", "iterations", "wall_ms", "x_error", "jac_error", "ratio"};
  for (const TruncationRow& r : rows) {
    t.rows.push_back({FormatDouble(r.eps), std::to_string(r.iterations),
                      FormatDouble(r.wall_ms), FormatDouble(r.x_error),
                      FormatDouble(r.jac_error), Optional(r.ratio)});
  }
  return t;
}

}  // namespace altdiff::bench
