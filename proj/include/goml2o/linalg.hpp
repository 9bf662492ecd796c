// Copyright 2026 The gom-l2o Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GOML2O_LINALG_HPP
#define GOML2O_LINALG_HPP

#include <cstddef>
#include <vector>

namespace goml2o {

using Vec = std::vector<double>;

// Dense row-major matrix. Problem sizes here are tiny (hundreds), so a flat
// vector beats pulling in a linear algebra dependency.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
double norm2_diff(const Vec& a, const Vec& b);  // ||a - b||

Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec scaled(const Vec& a, double c);
void axpy(double alpha, const Vec& x, Vec& y);  // y += alpha * x

Vec matvec(const Mat& m, const Vec& x);    // m * x
Vec matvec_t(const Mat& m, const Vec& x);  // m^T * x

// Solves A x = b for symmetric positive definite A via Cholesky.
// Used as an independent oracle for quadratic minimizers.
Vec cholesky_solve(const Mat& a, const Vec& b);

}  // namespace goml2o

#endif  // GOML2O_LINALG_HPP
