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

#include <stdexcept>
#include <string>
#include <string_view>

namespace altdiff {

enum class ErrorCode {
  kDimensionMismatch,
  kSingularMatrix,
  kNotSymmetric,
  kNotPsd,
  kGradientMismatch,
  kNonFinite,
  kNewtonDiverged,
  kSingularKkt,
  kKktNotSatisfied,
  kInfeasibleLayer,
  kDomainError,
  kInvalidArgument,
  kParseError,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported through this exception; `code()` is the
// machine-readable part, `what()` carries the diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace altdiff
