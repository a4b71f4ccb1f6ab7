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

#include <filesystem>
#include <string>

#include "altdiff/problem.hpp"

namespace altdiff {

// Problem documents:
//
//   {"n": 3,
//    "objective": {"type": "quadratic", "P": [[...]], "q": [...]}
//               | {"type": "sparsemax", "y": [...]}
//               | {"type": "softmax_entropy", "y": [...]},
//    "A": [[...]], "b": [...], "G": [[...]], "h": [...]}
//
// Absent constraint blocks are empty arrays. "sparsemax" expands to the
// quadratic 2I / -2y objective; "softmax_entropy" to sum x log x - y^T x.
// Loaded problems are validated.
ProblemSpec ProblemFromJson(const std::string& text);
std::string ProblemToJson(const ProblemSpec& p);

ProblemSpec LoadProblem(const std::filesystem::path& path);
void SaveProblem(const ProblemSpec& p, const std::filesystem::path& path);

}  // namespace altdiff
