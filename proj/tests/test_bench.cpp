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
#include <limits>
#include <cstring>
#include <random>
#include <sstream>

#include "altdiff/bench.hpp"
#include "altdiff/error.hpp"
#include "altdiff/numerics/linalg.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace altdiff;
using namespace altdiff::bench;

namespace {

BenchCase SmallCase(double eps) {
  BenchCase c;
  c.name = "small";
  c.n = 50;
  c.m_ineq = 20;
  c.p = 10;
  c.eps = eps;
  return c;
}

CsvTable RoundTrip(const CsvTable& t) {
  std::ostringstream out;
  WriteCsv(out, t);
  std::istringstream in(out.str());
  return ParseCsv(in);
}

}  // namespace

TEST_CASE("generator is deterministic in the seed") {
  const ProblemSpec a = GenRandomQp(20, 8, 4, 42);
  const ProblemSpec b = GenRandomQp(20, 8, 4, 42);
  CHECK(a.quadratic().P == b.quadratic().P);
  CHECK(a.quadratic().q == b.quadratic().q);
  CHECK(a.constraints.A == b.constraints.A);
  CHECK(a.constraints.b == b.constraints.b);
  CHECK(a.constraints.G == b.constraints.G);
  CHECK(a.constraints.h == b.constraints.h);
  CHECK(GenRandomQp(20, 8, 4, 43).quadratic().q != a.quadratic().q);
}

TEST_CASE("generated P is bounded below by 0.1 I") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ProblemSpec p = GenRandomQp(30, 10, 5, seed);
    // P - (0.1 - 1e-9) I admits a Cholesky factor iff its smallest eigenvalue is positive
    DenseMatrix shifted = p.quadratic().P;
    for (std::size_t i = 0; i < 30; ++i) shifted(i, i) -= 0.1 - 1e-9;
    CHECK(Factorize(shifted, true).kind() == Factorization::Kind::kCholesky);
    CHECK_NOTHROW(Validate(p));
  }
}

TEST_CASE("generated point is strictly feasible") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GeneratedQp g = GenRandomQpWithPoint(25, 12, 6, seed);
    const Polyhedron& c = g.problem.constraints;
    CHECK(Distance2(Matvec(c.A, g.z), c.b) <= 1e-12 * (1.0 + Norm2(c.b)));
    const Vector gz = Matvec(c.G, g.z);
    for (std::size_t i = 0; i < gz.size(); ++i) CHECK(c.h[i] - gz[i] >= 0.1 - 1e-12);
  }
}

TEST_CASE("case validation") {
  BenchCase c;
  CHECK_NOTHROW(CheckCase(c));
  c.p = c.n + 1;
  CHECK_THROWS_AS(CheckCase(c), Error);
  c = {};
  c.m_ineq = 0;
  CHECK_THROWS_AS(CheckCase(c), Error);
  CHECK(ParseLayerType("sparsemax") == LayerType::kSparsemax);
  CHECK(LayerTypeName(ParseLayerType("softmax")) == "softmax");
  CHECK(LayerTypeName(ParseLayerType("qp")) == "qp");
  CHECK_THROWS_AS(ParseLayerType("conv"), Error);
}

TEST_CASE("run case: small QP at eps 1e-3") {
  const BenchRecord r = RunCase(SmallCase(1e-3), 1);
  CHECK(r.error.empty());
  CHECK(r.altdiff_converged);
  CHECK(r.kkt_ok);
  REQUIRE(r.cosine_similarity.has_value());
  CHECK(*r.cosine_similarity >= 0.999);
  CHECK(*r.cosine_similarity <= 1.0 + 1e-12);
  CHECK(r.iterate_ms == doctest::Approx(r.altdiff_ms - r.factor_ms));
}

TEST_CASE("run case: forced weak activity is flagged") {
  BenchCase c = SmallCase(1e-6);
  c.force_weak = true;
  const BenchRecord r = RunCase(c, 1);
  CHECK(r.weakly_active);
  CHECK_FALSE(r.cosine_similarity.has_value());
  CHECK_FALSE(r.relative_error.has_value());
}

TEST_CASE("run case: eps 1e-6 converges to the reference") {
  const BenchRecord r = RunCase(SmallCase(1e-6), 1);
  REQUIRE(r.relative_error.has_value());
  CHECK(*r.relative_error <= 1e-3);
  CHECK(*r.cosine_similarity >= 0.999999);
}

TEST_CASE("run case: layer cases") {
  BenchCase c;
  c.n = 12;
  c.layer = LayerType::kSoftmax;
  const BenchRecord s = RunCase(c, 1);
  CHECK(s.error.empty());
  REQUIRE(s.cosine_similarity.has_value());
  CHECK(*s.cosine_similarity >= 0.999);
  c.layer = LayerType::kSparsemax;
  const BenchRecord m = RunCase(c, 1);
  CHECK(m.error.empty());
}

TEST_CASE("parallel cases give the same numbers, flagged unreliable") {
  std::vector<BenchCase> cases;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    BenchCase c;
    c.n = 20;
    c.m_ineq = 8;
    c.p = 4;
    c.seed = seed;
    cases.push_back(c);
  }
  const auto seq = RunCases(cases, 1, false);
  const auto par = RunCases(cases, 1, true);
  REQUIRE(seq.size() == 3);
  REQUIRE(par.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(seq[i].timing_reliable);
    CHECK_FALSE(par[i].timing_reliable);
    CHECK(seq[i].cosine_similarity == par[i].cosine_similarity);
    CHECK(seq[i].iterations == par[i].iterations);
  }
}

TEST_CASE("scaling sweep: a single size has no ratios") {
  const auto rows = ScalingSweep({{30, 12, 5}}, 1, 1e-3, 1);
  REQUIRE(rows.size() == 1);
  CHECK_FALSE(rows[0].factor_ratio.has_value());
  CHECK_FALSE(rows[0].backward_ratio.has_value());
  CHECK(rows[0].factor_ms > 0.0);
  CHECK(rows[0].iterations > 0);
}

TEST_CASE("scaling sweep: ratios present and sizes must ascend") {
  const auto rows = ScalingSweep({{20, 8, 4}, {40, 16, 4}}, 1, 1e-3, 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].factor_ratio.has_value());
  CHECK(rows[1].backward_ratio.has_value());
  CHECK_THROWS_AS(ScalingSweep({{40, 16, 4}, {20, 8, 4}}, 1, 1e-3, 1), Error);
}

TEST_CASE("truncation report") {
  BenchCase c;
  c.n = 20;
  c.m_ineq = 8;
  c.p = 4;
  const double one[] = {1e-3};
  const auto single = TruncationReport(c, one, 1);
  REQUIRE(single.size() == 1);
  CHECK(single[0].x_error == 0.0);
  CHECK(single[0].jac_error == 0.0);
  CHECK_FALSE(single[0].ratio.has_value());

  const double three[] = {1e-1, 1e-2, 1e-3};
  const auto rows = TruncationReport(c, three, 1);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].iterations <= rows[1].iterations);
  CHECK(rows[1].iterations <= rows[2].iterations);
  CHECK(rows[2].x_error == 0.0);
  REQUIRE(rows[0].ratio.has_value());
  CHECK(*rows[0].ratio == doctest::Approx(rows[0].jac_error / rows[0].x_error));
}

TEST_CASE("error ratio trace has one entry per iteration") {
  const ProblemSpec p = GenRandomQp(15, 6, 3, 2);
  SolverConfig tight;
  tight.eps = 1e-10;
  const DiffReport ref = Differentiate(p, EqRhs{}, tight);
  SolverConfig cfg;
  cfg.eps = 1e-4;
  const std::vector<double> trace =
      ErrorRatioTrace(p, EqRhs{}, cfg, ref.forward.state.x, ref.jac.Jx);
  CHECK(trace.size() == Differentiate(p, EqRhs{}, cfg).forward.state.k);
  for (double v : trace) CHECK(std::isfinite(v));
}

TEST_CASE("shortest round-trip doubles") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::uint64_t> bits;
  int checked = 0;
  while (checked < 2000) {
    const std::uint64_t b = bits(rng);
    double v;
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    CHECK(ParseDouble(FormatDouble(v)) == v);
    ++checked;
  }
  for (double v : {0.0, -0.0, 1e-300, 5e-324, 1.7976931348623157e308, 0.1, -2.5}) {
    CHECK(ParseDouble(FormatDouble(v)) == v);
  }
  CHECK(FormatDouble(0.1) == "0.1");
  CHECK_THROWS_AS(ParseDouble("1.5x"), Error);
  CHECK_THROWS_AS(ParseDouble(""), Error);
}

TEST_CASE("csv quoting") {
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{"plain", "with,comma"}, {"with \"quote\"", "line\nbreak"}, {"", " "}};
  std::ostringstream out;
  WriteCsv(out, t);
  CHECK(out.str().rfind("a,b\r\nplain,\"with,comma\"\r\n", 0) == 0);
  const CsvTable back = RoundTrip(t);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
}

TEST_CASE("csv parse errors") {
  std::istringstream ragged("a,b\r\n1\r\n");
  CHECK_THROWS_AS(ParseCsv(ragged), Error);
  std::istringstream open_quote("a\r\n\"abc\r\n");
  CHECK_THROWS_AS(ParseCsv(open_quote), Error);
  std::istringstream stray("a\r\nab\"c\r\n");
  CHECK_THROWS_AS(ParseCsv(stray), Error);
}

TEST_CASE("property: benchmark CSV round-trips every numeric field") {
  BenchRecord r;
  r.bench_case = SmallCase(1e-3);
  r.bench_case.name = "case, \"quoted\"";
  r.altdiff_ms = 1.0 / 3.0;
  r.factor_ms = 0.1;
  r.iterate_ms = r.altdiff_ms - r.factor_ms;
  r.forward_ms = 1e-7;
  r.backward_ms = 123456.789;
  r.kkt_ms = std::nextafter(2.0, 3.0);
  r.cosine_similarity = 0.99999999999;
  r.iterations = 77;
  BenchRecord empty;
  empty.error = "SingularKkt: degenerate";
  const std::vector<BenchRecord> recs{r, empty};
  const CsvTable t = RecordsToCsv(recs);
  const CsvTable back = RoundTrip(t);
  REQUIRE(back.rows == t.rows);
  CHECK(back.rows[0][0] == r.bench_case.name);
  CHECK(ParseDouble(back.rows[0][8]) == r.altdiff_ms);
  CHECK(ParseDouble(back.rows[0][13]) == r.kkt_ms);
  CHECK(ParseDouble(back.rows[0][14]) == *r.cosine_similarity);
  CHECK(back.rows[0][15].empty());
  CHECK(back.rows[1].back() == empty.error);

  ScalingRow s;
  s.n = 100;
  s.factor_ms = 0.123456789012345;
  s.factor_ratio = 7.77;
  const CsvTable st = RoundTrip(ScalingToCsv({s}));
  CHECK(ParseDouble(st.rows[0][4]) == s.factor_ms);
  CHECK(ParseDouble(st.rows[0][7]) == *s.factor_ratio);
  CHECK(st.rows[0][8].empty());

  TruncationRow tr;
  tr.eps = 1e-2;
  tr.x_error = 3.0e-5;
  tr.ratio = 12.5;
  const CsvTable tt = RoundTrip(TruncationToCsv({tr}));
  CHECK(ParseDouble(tt.rows[0][0]) == tr.eps);
  CHECK(ParseDouble(tt.rows[0][3]) == tr.x_error);
}

TEST_CASE("property: identical cases give identical Jacobians") {
  const ProblemSpec p = BuildCaseProblem(SmallCase(1e-3));
  const ProblemSpec q = BuildCaseProblem(SmallCase(1e-3));
  SolverConfig cfg;
  cfg.eps = 1e-3;
  CHECK(Differentiate(p, EqRhs{}, cfg).jac.Jx == Differentiate(q, EqRhs{}, cfg).jac.Jx);
}
