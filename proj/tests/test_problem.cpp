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
#include <filesystem>
#include <string>

#include "altdiff/error.hpp"
#include "altdiff/numerics/linalg.hpp"
#include "altdiff/problem.hpp"
#include "altdiff/problem_io.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace altdiff;
using altdiff::testing::MakeQp;

namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kInvalidArgument;
}

void CheckSameQp(const ProblemSpec& a, const ProblemSpec& b) {
  REQUIRE(a.is_quadratic());
  REQUIRE(b.is_quadratic());
  CHECK(a.n == b.n);
  CHECK(a.quadratic().P == b.quadratic().P);
  CHECK(a.quadratic().q == b.quadratic().q);
  CHECK(a.constraints.A == b.constraints.A);
  CHECK(a.constraints.b == b.constraints.b);
  CHECK(a.constraints.G == b.constraints.G);
  CHECK(a.constraints.h == b.constraints.h);
}

// n = 3, p = 2, m = 4 with dyadic entries
ProblemSpec DyadicQp() {
  return MakeQp(DenseMatrix{{2.0, 0.5, 0.0}, {0.5, 1.0, 0.25}, {0.0, 0.25, 1.5}},
                {0.5, -1.0, 0.125}, DenseMatrix{{1.0, 1.0, 0.0}, {0.0, 0.5, -1.0}},
                {1.0, 0.25}, DenseMatrix{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0},
                                         {-1.0, -1.0, -1.0}},
                {2.0, 2.0, 2.0, 0.5});
}

ConvexObjective ExpMinusX(bool wrong_gradient) {
  ConvexObjective f;
  f.name = "exp";
  f.value = [](std::span<const double> x) { return std::exp(x[0]) - x[0]; };
  f.gradient = [wrong_gradient](std::span<const double> x) {
    return Vector{wrong_gradient ? 2.0 * std::exp(x[0]) : std::exp(x[0]) - 1.0};
  };
  f.hessian = [](std::span<const double> x) { return DenseMatrix{{std::exp(x[0])}}; };
  f.q = {0.0};
  return f;
}

}  // namespace

TEST_CASE("validate: one-variable QP without constraints") {
  CHECK_NOTHROW(Validate(MakeQp({{1.0}}, {0.0}, {}, {}, {}, {})));
}

TEST_CASE("validate: asymmetric P") {
  CHECK(CodeOf([] { Validate(MakeQp({{1.0, 2.0}, {0.0, 1.0}}, {0.0, 0.0}, {}, {}, {}, {})); }) ==
        ErrorCode::kNotSymmetric);
}

TEST_CASE("validate: A with too many columns") {
  CHECK(CodeOf([] {
          ProblemSpec p = MakeQp(DenseMatrix::Identity(2), {0.0, 0.0}, {}, {}, {}, {});
          p.constraints.A = DenseMatrix{{1.0, 1.0, 1.0}};
          p.constraints.b = {1.0};
          Validate(p);
        }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("validate: further failures") {
  CHECK(CodeOf([] { Validate(MakeQp({{-1.0, 0.0}, {0.0, 1.0}}, {0.0, 0.0}, {}, {}, {}, {})); }) ==
        ErrorCode::kNotPsd);
  CHECK(CodeOf([] {
          ProblemSpec p = MakeQp({{1.0}}, {0.0}, {{1.0}}, {1.0, 2.0}, {}, {});
          Validate(p);
        }) == ErrorCode::kDimensionMismatch);
  ProblemSpec good;
  good.n = 1;
  good.objective = ExpMinusX(false);
  good.constraints = {DenseMatrix(0, 1), {}, DenseMatrix(0, 1), {}};
  CHECK_NOTHROW(Validate(good));
  ProblemSpec bad = good;
  bad.objective = ExpMinusX(true);
  CHECK(CodeOf([&] { Validate(bad); }) == ErrorCode::kGradientMismatch);
}

TEST_CASE("theta dimension per selector") {
  ProblemSpec energy = MakeQp(Scaled(DenseMatrix::Identity(24), 2.0), Vector(24, 0.0), {}, {},
                              {}, {});
  CHECK(ThetaDim(energy, LinearCost{}) == 24);
  const ProblemSpec ten = MakeQp(DenseMatrix::Identity(12), Vector(12, 0.0),
                                 testing::RandomMatrix(10, 12, 1), Vector(10, 0.0), {}, {});
  CHECK(ThetaDim(ten, EqRhs{}) == 10);
  CHECK(ThetaDim(ten, IneqRhs{}) == 0);
  CHECK(ThetaDim(ten, Direction{}) == 1);
  Direction d;
  d.db = {1.0, 0.0};
  CHECK_THROWS_AS(ThetaDim(ten, d), Error);
}

TEST_CASE("perturb examples") {
  const ProblemSpec p = DyadicQp();
  CheckSameQp(Perturb(p, EqRhs{}, Vector{0.0, 0.0}), p);

  const ProblemSpec q = Perturb(p, LinearCost{}, Vector{1.0, 0.0, 0.0});
  CHECK(q.quadratic().q == Vector{1.5, -1.0, 0.125});

  Direction d;
  d.db = {1.0, 0.0};
  const ProblemSpec r = Perturb(p, d, Vector{0.5});
  CHECK(r.constraints.b == Vector{1.5, 0.25});
  CHECK(r.constraints.A == p.constraints.A);

  CHECK_THROWS_AS(Perturb(p, EqRhs{}, Vector{1.0}), Error);
}

TEST_CASE("property: perturb round-trip is exact on dyadic data") {
  const ProblemSpec p = DyadicQp();
  Direction d;
  d.dP = DenseMatrix{{0.5, 0.25, 0.0}, {0.25, 0.0, 0.0}, {0.0, 0.0, 1.0}};
  d.dq = {1.0, 0.5, -0.25};
  d.dA = DenseMatrix{{0.0, 1.0, 0.5}, {0.25, 0.0, 0.0}};
  d.db = {0.5, -0.5};
  d.dG = DenseMatrix(4, 3);
  d.dG(2, 1) = 0.75;
  d.dh = {0.0, 1.0, 0.5, 0.25};
  const ParamSelector sels[] = {LinearCost{}, EqRhs{}, IneqRhs{}, d};
  for (const ParamSelector& sel : sels) {
    CAPTURE(SelectorName(sel));
    Vector delta(ThetaDim(p, sel));
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = 0.25 * static_cast<double>(i + 1);
    Vector minus = Scaled(delta, -1.0);
    CheckSameQp(Perturb(Perturb(p, sel, delta), sel, minus), p);
  }
}

TEST_CASE("problem JSON round-trip") {
  const ProblemSpec p = DyadicQp();
  const ProblemSpec back = ProblemFromJson(ProblemToJson(p));
  CheckSameQp(back, p);

  const auto path = std::filesystem::temp_directory_path() / "altdiff_problem_roundtrip.json";
  SaveProblem(p, path);
  CheckSameQp(LoadProblem(path), p);
  std::filesystem::remove(path);
}

TEST_CASE("problem JSON layer shorthands") {
  const ProblemSpec s = ProblemFromJson(
      R"({"n": 2, "objective": {"type": "sparsemax", "y": [2, 0]},
          "A": [[1, 1]], "b": [1], "G": [[-1, 0], [0, -1], [1, 0], [0, 1]], "h": [0, 0, 1, 1]})");
  REQUIRE(s.is_quadratic());
  CHECK(s.quadratic().P == Scaled(DenseMatrix::Identity(2), 2.0));
  CHECK(s.quadratic().q == Vector{-4.0, 0.0});

  const ProblemSpec e = ProblemFromJson(
      R"({"n": 2, "objective": {"type": "softmax_entropy", "y": [0.5, 0]},
          "A": [[1, 1]], "b": [1], "G": [], "h": []})");
  REQUIRE_FALSE(e.is_quadratic());
  CHECK(e.linear_cost() == Vector{-0.5, 0.0});
  CHECK(e.ObjectiveValue(Vector{0.5, 0.5}) == doctest::Approx(std::log(0.5) - 0.25));
}

TEST_CASE("problem JSON errors") {
  CHECK(CodeOf([] { (void)ProblemFromJson("{not json"); }) == ErrorCode::kParseError);
  CHECK(CodeOf([] { (void)ProblemFromJson(R"({"n": 1, "objective": {"type": "cubic"}})"); }) ==
        ErrorCode::kParseError);
  CHECK(CodeOf([] {
          (void)ProblemFromJson(
              R"({"n": 2, "objective": {"type": "quadratic", "P": [[1, 2], [0, 1]], "q": [0, 0]}})");
        }) == ErrorCode::kNotSymmetric);
  CHECK(CodeOf([] {
          (void)ProblemFromJson(
              R"({"n": 1, "objective": {"type": "quadratic", "P": [[1]], "q": [0]},
                  "A": [[1], [1, 2]], "b": [0, 0]})");
        }) == ErrorCode::kParseError);
}
