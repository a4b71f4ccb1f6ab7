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

#include "altdiff/problem_io.hpp"

#include <fstream>
#include <sstream>

#include "altdiff/error.hpp"
#include "altdiff/layers.hpp"
#include "altdiff/numerics/linalg.hpp"
#include "json.hpp"

namespace altdiff {
namespace {

using nlohmann::json;

[[noreturn]] void ParseFail(const std::string& what) {
  throw Error(ErrorCode::kParseError, what);
}

Vector ReadVector(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  if (!j.at(key).is_array()) ParseFail(std::string(key) + " must be an array");
  return j.at(key).get<Vector>();
}

DenseMatrix ReadMatrix(const json& j, const char* key, std::size_t cols) {
  if (!j.contains(key)) return DenseMatrix(0, cols);
  const json& rows = j.at(key);
  if (!rows.is_array()) ParseFail(std::string(key) + " must be an array of rows");
  if (rows.empty()) return DenseMatrix(0, cols);
  std::vector<double> entries;
  const std::size_t width = rows.front().size();
  for (const json& r : rows) {
    if (!r.is_array() || r.size() != width) {
      ParseFail(std::string(key) + " rows must be arrays of equal length");
    }
    for (const json& v : r) entries.push_back(v.get<double>());
  }
  return DenseMatrix(rows.size(), width, std::move(entries));
}

json WriteMatrix(const DenseMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    rows.push_back(Vector(m.row(i).begin(), m.row(i).end()));
  }
  return rows;
}

}  // namespace

ProblemSpec ProblemFromJson(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    ParseFail(e.what());
  }
  try {
    ProblemSpec p;
    p.n = doc.at("n").get<std::size_t>();
    const json& obj = doc.at("objective");
    const std::string type = obj.at("type").get<std::string>();
    if (type == "quadratic") {
      p.objective = QuadraticObjective{ReadMatrix(obj, "P", p.n), ReadVector(obj, "q")};
    } else if (type == "sparsemax") {
      const Vector y = ReadVector(obj, "y");
      DenseMatrix P(y.size(), y.size());
      for (std::size_t i = 0; i < y.size(); ++i) P(i, i) = 2.0;
      p.objective = QuadraticObjective{std::move(P), Scaled(y, -2.0)};
    } else if (type == "softmax_entropy") {
      p.objective = layers::SoftmaxEntropyObjective(ReadVector(obj, "y"));
    } else {
      ParseFail("unknown objective type '" + type + "'");
    }
    p.constraints.A = ReadMatrix(doc, "A", p.n);
    p.constraints.b = ReadVector(doc, "b");
    p.constraints.G = ReadMatrix(doc, "G", p.n);
    p.constraints.h = ReadVector(doc, "h");
    Validate(p);
    return p;
  } catch (const json::exception& e) {
    ParseFail(e.what());
  }
}

std::string ProblemToJson(const ProblemSpec& p) {
  json doc;
  doc["n"] = p.n;
  if (p.is_quadratic()) {
    const auto& quad = p.quadratic();
    doc["objective"] = {{"type", "quadratic"}, {"P", WriteMatrix(quad.P)}, {"q", quad.q}};
  } else if (p.convex().name == "softmax_entropy") {
    doc["objective"] = {{"type", "softmax_entropy"}, {"y", Scaled(p.convex().q, -1.0)}};
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "objective '" + p.convex().name + "' has no JSON representation");
  }
  doc["A"] = WriteMatrix(p.constraints.A);
  doc["b"] = p.constraints.b;
  doc["G"] = WriteMatrix(p.constraints.G);
  doc["h"] = p.constraints.h;
  return doc.dump(1);
}

ProblemSpec LoadProblem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) ParseFail("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ProblemFromJson(buf.str());
}

void SaveProblem(const ProblemSpec& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path.string());
  out << ProblemToJson(p) << '\n';
}

}  // namespace altdiff
