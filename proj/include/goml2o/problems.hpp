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

#ifndef GOML2O_PROBLEMS_HPP
#define GOML2O_PROBLEMS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "goml2o/common.hpp"
#include "goml2o/linalg.hpp"

namespace goml2o {

enum class ProblemKind { kLasso, kLogistic };

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& s);

// One optimization problem F(x) = f(x) + lambda * ||x + t||_1.
//
// For LASSO, f(x) = 0.5 * ||A(x+t) - b||^2 with A in R^{m x n}.
// For logistic regression the rows of A are the feature vectors a_i and b
// holds the 0/1 labels; f is the mean logistic loss at x + t.
// The translation t realizes the objective-shift evaluation scenario
// F'(x) = F(x + t); t = 0 is the in-distribution case.
struct ProblemInstance {
  ProblemKind kind = ProblemKind::kLasso;
  Mat a;
  Vec b;
  double lambda = 0.0;
  double smoothness = 0.0;  // L for the smooth part
  Vec translation_t;        // empty or size n; empty means 0
  std::uint64_t seed = 0;

  std::size_t dim() const { return a.cols; }
  std::size_t num_rows() const { return a.rows; }
  bool is_translated() const;
  double translation(std::size_t i) const {
    return translation_t.empty() ? 0.0 : translation_t[i];
  }

  // Validates shapes and recomputes L.
  static ProblemInstance make(ProblemKind kind, Mat a, Vec b, double lambda,
                              Vec translation_t, std::uint64_t seed);

  ProblemInstance with_translation(Vec t) const;
};

// Elementwise bounds of the subdifferential of lambda * ||x + t||_1.
struct SubgradientBounds {
  Vec lb;
  Vec ub;
};

// Largest eigenvalue of the Hessian bound for the smooth part:
// LASSO -> sigma_max(A)^2, logistic -> lambda_max((1/m) sum a_i a_i^T).
// Power iteration to relative tolerance 1e-10, at most 10^4 iterations.
double compute_smoothness(ProblemKind kind, const Mat& a);

// Gradient of the smooth part at x (translated objective when t != 0).
Vec smooth_gradient(const ProblemInstance& p, const Vec& x);

// Smooth part value f(x).
double smooth_objective(const ProblemInstance& p, const Vec& x);

// Full objective F(x) = f(x) + lambda * ||x + t||_1.
double objective(const ProblemInstance& p, const Vec& x);

// Proximal step for r(x) = lambda * ||x + t||_1 under the diagonal metric
// with per-coordinate weights p_i, expressed through thresholds_i =
// lambda * p_i: returns the minimizer of r(x) + 0.5 sum (x_i-xbar_i)^2/p_i.
Vec prox_l1(const Vec& xbar, const Vec& thresholds, const Vec& t);
double prox_l1_scalar(double xbar, double threshold, double t);

SubgradientBounds subgradient_bounds(const ProblemInstance& p, const Vec& x);

// Synthetic instances: deterministic per (seed, index).
std::vector<ProblemInstance> generate_dataset(ProblemKind kind, std::size_t n,
                                              std::size_t m, std::size_t count,
                                              std::uint64_t seed);
ProblemInstance generate_instance(ProblemKind kind, std::size_t n, std::size_t m,
                                  std::uint64_t instance_seed);

// Reference solution from a 5000-iteration FISTA run started at zero.
struct Label {
  Vec x_star;
  double f_star = 0.0;
};
Label generate_label(const ProblemInstance& p);

// Manifest record: matrices are regenerated from the per-record seed.
struct DatasetRecord {
  ProblemKind kind;
  std::size_t n;
  std::size_t m;
  double lambda;
  std::uint64_t seed;
};

std::string dataset_record_line(const DatasetRecord& rec);
DatasetRecord parse_dataset_record(const std::string& line);
ProblemInstance instantiate(const DatasetRecord& rec);

}  // namespace goml2o

#endif  // GOML2O_PROBLEMS_HPP
