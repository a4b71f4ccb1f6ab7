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

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "altdiff/backward.hpp"
#include "altdiff/forward.hpp"
#include "altdiff/numerics/matrix.hpp"
#include "altdiff/problem.hpp"

namespace altdiff::bench {

enum class LayerType { kDenseQp, kSparsemax, kSoftmax };

std::string LayerTypeName(LayerType t);
// Throws Error(kInvalidArgument) on unknown names.
LayerType ParseLayerType(const std::string& name);

struct BenchCase {
  std::string name;
  std::size_t n = 50;
  std::size_t m_ineq = 20;
  std::size_t p = 10;
  std::uint64_t seed = 0;
  LayerType layer = LayerType::kDenseQp;
  double eps = 1e-3;
  double rho = 1.0;
  // Makes one inactive inequality weakly active (dense QP only).
  bool force_weak = false;
};

// Throws Error(kInvalidArgument) unless counts are positive and p <= n.
void CheckCase(const BenchCase& c);

struct GeneratedQp {
  ProblemSpec problem;
  Vector z;  // strictly feasible: A z = b, G z < h
};

// P = M^T M + 0.1 I, q ~ N(0, 1), A, G ~ N(0, 1), b = A z, h = G z + |w| + 0.1
// with z, w ~ N(0, 1). Deterministic in the seed.
GeneratedQp GenRandomQpWithPoint(std::size_t n, std::size_t m_ineq, std::size_t p,
                                 std::uint64_t seed);
ProblemSpec GenRandomQp(std::size_t n, std::size_t m_ineq, std::size_t p,
                        std::uint64_t seed);

// Seeded problem for the case's layer type. Sparsemax and softmax cases draw
// y ~ N(0, 1) and u ~ U(0.3, 0.8); m_ineq and p are implied by n.
ProblemSpec BuildCaseProblem(const BenchCase& c);

// Selector the case is differentiated with: EqRhs for dense QPs, LinearCost
// for the layers.
ParamSelector CaseSelector(const BenchCase& c);

struct BenchRecord {
  BenchCase bench_case;
  double altdiff_ms = 0.0;   // forward + backward, factorization included
  double factor_ms = 0.0;    // one-time factorization share
  double iterate_ms = 0.0;   // altdiff_ms - factor_ms
  double forward_ms = 0.0;   // excluding factorization
  double backward_ms = 0.0;
  double kkt_ms = 0.0;       // reference assemble + solve
  std::optional<double> cosine_similarity;
  std::optional<double> relative_error;  // ||J - J_kkt||_F / ||J_kkt||_F
  std::size_t iterations = 0;
  bool altdiff_converged = false;
  bool kkt_ok = false;
  bool weakly_active = false;
  bool timing_reliable = true;
  std::string error;
};

// Median wall times over `repeats` runs of Alt-Diff and of the KKT
// reference on the same problem. Solver errors are recorded, not thrown.
BenchRecord RunCase(const BenchCase& c, int repeats = 5);

// Cases run one after another unless `parallel`, in which case timings are
// flagged unreliable.
std::vector<BenchRecord> RunCases(const std::vector<BenchCase>& cases, int repeats,
                                  bool parallel);

struct ScalingRow {
  std::size_t n = 0;
  std::size_t m_ineq = 0;
  std::size_t p = 0;
  std::size_t iterations = 0;
  // Standalone Cholesky of P + rho(A^T A + G^T G), warmed: median over 21+
  // batches of >= 2 ms, per call.
  double factor_ms = 0.0;
  double forward_iter_ms = 0.0;
  double backward_iter_ms = 0.0;
  // Against the previous row; absent on the first.
  std::optional<double> factor_ratio;
  std::optional<double> backward_ratio;
};

// Dense QPs differentiated with EqRhs; medians of `repeats` runs, sizes
// interleaved round by round. `sizes` must be ascending in n.
std::vector<ScalingRow> ScalingSweep(
    const std::vector<std::array<std::size_t, 3>>& sizes, std::uint64_t seed,
    double eps = 1e-3, int repeats = 5);

struct TruncationRow {
  double eps = 0.0;
  std::size_t iterations = 0;
  double wall_ms = 0.0;
  double x_error = 0.0;
  double jac_error = 0.0;
  std::optional<double> ratio;  // jac_error / x_error, absent when x_error == 0
};

// One row per tolerance; errors against the tightest run, wall time the
// median of `repeats`.
std::vector<TruncationRow> TruncationReport(const BenchCase& c,
                                            std::span<const double> eps_list,
                                            int repeats = 5);

// ||J_k - J_ref||_F / ||x_k - x_ref||_2 at every iteration of one run.
std::vector<double> ErrorRatioTrace(const ProblemSpec& p, const ParamSelector& sel,
                                    const SolverConfig& cfg, const Vector& x_ref,
                                    const DenseMatrix& jac_ref);

// Minimal RFC 4180 table. Doubles are written in shortest round-trip form.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string FormatDouble(double v);
// Throws Error(kParseError) unless the whole field is a number.
double ParseDouble(const std::string& field);

void WriteCsv(std::ostream& out, const CsvTable& table);
// Throws Error(kParseError) on malformed quoting or ragged rows.
CsvTable ParseCsv(std::istream& in);

CsvTable RecordsToCsv(const std::vector<BenchRecord>& records);
CsvTable ScalingToCsv(const std::vector<ScalingRow>& rows);
CsvTable TruncationToCsv(const std::vector<TruncationRow>& rows);

}  // namespace altdiff::bench
