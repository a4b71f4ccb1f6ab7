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

#include <cstddef>
#include <span>

#include "altdiff/numerics/matrix.hpp"

namespace altdiff {

// Matrix and vector arithmetic. All routines throw
// Error(kDimensionMismatch) on nonconforming shapes.

DenseMatrix Matmul(const DenseMatrix& a, const DenseMatrix& b);
// a^T * b without forming the transpose.
DenseMatrix MatmulTn(const DenseMatrix& a, const DenseMatrix& b);
// a^T * a.
DenseMatrix Gram(const DenseMatrix& a);

Vector Matvec(const DenseMatrix& a, std::span<const double> x);
// a^T * x.
Vector MatvecT(const DenseMatrix& a, std::span<const double> x);

DenseMatrix Transpose(const DenseMatrix& a);

DenseMatrix Add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix Subtract(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix Scaled(const DenseMatrix& a, double alpha);
// a += alpha * b
void AddScaledInPlace(DenseMatrix& a, double alpha, const DenseMatrix& b);

Vector Add(std::span<const double> a, std::span<const double> b);
Vector Subtract(std::span<const double> a, std::span<const double> b);
Vector Scaled(std::span<const double> a, double alpha);
// y += alpha * x
void AxpyInPlace(double alpha, std::span<const double> x, std::span<double> y);

double Dot(std::span<const double> a, std::span<const double> b);
double Norm2(std::span<const double> v);
double NormInf(std::span<const double> v);
double FrobeniusNorm(const DenseMatrix& a);
double FrobeniusDistance(const DenseMatrix& a, const DenseMatrix& b);
double Distance2(std::span<const double> a, std::span<const double> b);

// ||x_new - x_old||_2 / max(||x_old||_2, 1e-12)
double RelativeStepNorm(std::span<const double> x_new,
                        std::span<const double> x_old);

// Cosine similarity of the flattened entries; 0 when either side is zero.
double CosineSimilarity(std::span<const double> a, std::span<const double> b);

bool AllFinite(std::span<const double> v);

void RequireSameSize(std::size_t a, std::size_t b, const char* what);

}  // namespace altdiff
