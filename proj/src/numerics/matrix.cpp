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

#include "altdiff/numerics/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "altdiff/error.hpp"

namespace altdiff {
namespace {

void RequireFinite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kNonFinite, "matrix entry is NaN or Inf");
    }
  }
}

}  // namespace

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSingularMatrix: return "SingularMatrix";
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kNotPsd: return "NotPSD";
    case ErrorCode::kGradientMismatch: return "GradientMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kNewtonDiverged: return "NewtonDiverged";
    case ErrorCode::kSingularKkt: return "SingularKkt";
    case ErrorCode::kKktNotSatisfied: return "KktNotSatisfied";
    case ErrorCode::kInfeasibleLayer: return "InfeasibleLayer";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "entries length " + std::to_string(data_.size()) +
                    " != rows*cols " + std::to_string(rows_ * cols_));
  }
  RequireFinite(data_);
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw Error(ErrorCode::kDimensionMismatch, "ragged initializer rows");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
  RequireFinite(data_);
}

DenseMatrix DenseMatrix::Identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::Diagonal(std::span<const double> diag) {
  DenseMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

DenseMatrix DenseMatrix::Column(std::span<const double> v) {
  return DenseMatrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

Vector DenseMatrix::col(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void DenseMatrix::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

}  // namespace altdiff
