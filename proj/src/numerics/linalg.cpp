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

#include "altdiff/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "altdiff/error.hpp"
#include "altdiff/numerics/kernels.hpp"

namespace altdiff {

void RequireSameSize(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": " + std::to_string(a) +
                    " vs " + std::to_string(b));
  }
}

DenseMatrix Matmul(const DenseMatrix& a, const DenseMatrix& b) {
  RequireSameSize(a.cols(), b.rows(), "matmul inner dimension");
  const auto& k = kernels::Active();
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.row(i).data();
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const double ail = a(i, l);
      if (ail != 0.0) k.axpy(ail, b.row(l).data(), ci, b.cols());
    }
  }
  return c;
}

DenseMatrix MatmulTn(const DenseMatrix& a, const DenseMatrix& b) {
  RequireSameSize(a.rows(), b.rows(), "matmul_tn shared dimension");
  const auto& k = kernels::Active();
  DenseMatrix c(a.cols(), b.cols());
  for (std::size_t l = 0; l < a.rows(); ++l) {
    const double* bl = b.row(l).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ali = a(l, i);
      if (ali != 0.0) k.axpy(ali, bl, c.row(i).data(), b.cols());
    }
  }
  return c;
}

DenseMatrix Gram(const DenseMatrix& a) { return MatmulTn(a, a); }

Vector Matvec(const DenseMatrix& a, std::span<const double> x) {
  RequireSameSize(a.cols(), x.size(), "matvec");
  const auto& k = kernels::Active();
  Vector y(a.rows());
  if (a.rows() > 0) k.gemv(a.data(), a.cols(), a.rows(), x.data(), x.size(), y.data());
  return y;
}

Vector MatvecT(const DenseMatrix& a, std::span<const double> x) {
  RequireSameSize(a.rows(), x.size(), "matvec_t");
  const auto& k = kernels::Active();
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (x[i] != 0.0) k.axpy(x[i], a.row(i).data(), y.data(), y.size());
  }
  return y;
}

DenseMatrix Transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

namespace {

void RequireSameShape(const DenseMatrix& a, const DenseMatrix& b,
                      const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " +
                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

}  // namespace

DenseMatrix Add(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c = a;
  AddScaledInPlace(c, 1.0, b);
  return c;
}

DenseMatrix Subtract(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c = a;
  AddScaledInPlace(c, -1.0, b);
  return c;
}

DenseMatrix Scaled(const DenseMatrix& a, double alpha) {
  DenseMatrix c(a.rows(), a.cols());
  kernels::Active().axpy(alpha, a.data(), c.data(), a.size());
  return c;
}

void AddScaledInPlace(DenseMatrix& a, double alpha, const DenseMatrix& b) {
  RequireSameShape(a, b, "matrix add");
  kernels::Active().axpy(alpha, b.data(), a.data(), a.size());
}

Vector Add(std::span<const double> a, std::span<const double> b) {
  RequireSameSize(a.size(), b.size(), "vector add");
  Vector c(a.begin(), a.end());
  kernels::Active().axpy(1.0, b.data(), c.data(), c.size());
  return c;
}

Vector Subtract(std::span<const double> a, std::span<const double> b) {
  RequireSameSize(a.size(), b.size(), "vector subtract");
  Vector c(a.begin(), a.end());
  kernels::Active().axpy(-1.0, b.data(), c.data(), c.size());
  return c;
}

Vector Scaled(std::span<const double> a, double alpha) {
  Vector c(a.size(), 0.0);
  kernels::Active().axpy(alpha, a.data(), c.data(), c.size());
  return c;
}

void AxpyInPlace(double alpha, std::span<const double> x, std::span<double> y) {
  RequireSameSize(x.size(), y.size(), "axpy");
  kernels::Active().axpy(alpha, x.data(), y.data(), y.size());
}

double Dot(std::span<const double> a, std::span<const double> b) {
  RequireSameSize(a.size(), b.size(), "dot");
  return kernels::Active().dot(a.data(), b.data(), a.size());
}

double Norm2(std::span<const double> v) {
  return std::sqrt(kernels::Active().dot(v.data(), v.data(), v.size()));
}

double NormInf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double FrobeniusNorm(const DenseMatrix& a) { return Norm2(a.entries()); }

double FrobeniusDistance(const DenseMatrix& a, const DenseMatrix& b) {
  RequireSameShape(a, b, "frobenius distance");
  return std::sqrt(kernels::Active().sq_dist(a.data(), b.data(), a.size()));
}

double Distance2(std::span<const double> a, std::span<const double> b) {
  RequireSameSize(a.size(), b.size(), "distance");
  return std::sqrt(kernels::Active().sq_dist(a.data(), b.data(), a.size()));
}

double RelativeStepNorm(std::span<const double> x_new,
                        std::span<const double> x_old) {
  return Distance2(x_new, x_old) / std::max(Norm2(x_old), 1e-12);
}

double CosineSimilarity(std::span<const double> a, std::span<const double> b) {
  const double na = Norm2(a);
  const double nb = Norm2(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(Dot(a, b) / (na * nb), -1.0, 1.0);
}

bool AllFinite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace altdiff
