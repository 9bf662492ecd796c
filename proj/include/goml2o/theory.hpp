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

#ifndef GOML2O_THEORY_HPP
#define GOML2O_THEORY_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "goml2o/linalg.hpp"
#include "goml2o/problems.hpp"

namespace goml2o {

// A constructed differentiable map equal to a prescribed anchor value at the
// anchor input:
//   N(z) = base + epsilon * tanh(a . (z - anchor))  per output coordinate.
// Its Jacobian Frobenius norm is bounded analytically by
// epsilon * ||a|| * sqrt(n_out); tanh(0) = 0 makes the anchor exact.
struct WitnessNet {
  Vec base;       // anchor output, one entry per output coordinate
  Vec anchor;     // z_anchor
  Vec direction;  // a
  double epsilon = 0.0;

  std::size_t n_out() const { return base.size(); }
  double c_bound() const;
  Vec eval(const Vec& z) const;
  void rebase(Vec new_anchor, Vec new_base);
};

// Frobenius norm of the central finite-difference Jacobian (h = 1e-5).
double fd_jacobian_frobenius(const std::function<Vec(const Vec&)>& f, const Vec& z,
                             std::size_t n_out, double h = 1e-5);

// Differences between the aligned OOD and InD runs:
// s_k = x'_k - x_k and s'_k = z'_k - z_k, indexed 0..K.
struct VirtualTrajectory {
  std::vector<Vec> s;
  std::vector<Vec> s_prime;
  std::size_t horizon = 0;
};

struct TheoryReport {
  std::string check_name;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;  // min over trials of (RHS - LHS)
  double tolerance = 0.0;

  void absorb(double margin);
  std::string csv_row() const;
};

// One randomized objective-translation scenario on a smooth quadratic
// normalized to L ~= 1, driven by witness nets anchored per step at the InD
// features (Assumption-1 values).
struct OodScenario {
  ProblemInstance p_ind;   // lambda = 0
  ProblemInstance p_ood;   // same smooth part, translated by t
  Vec x0;
  Vec s0;
  Vec dir1, dir2;          // witness directions in R^{2n}
  double eps1 = 0.05;
  double eps2 = 0.05;
  std::size_t horizon = 20;
};

OodScenario make_ood_scenario(std::size_t n, std::size_t m, std::size_t horizon,
                              double eps1, double eps2, double t_value, double s0_scale,
                              std::uint64_t seed);

// Recorded quantities of one scenario roll, enough to evaluate every bound
// term-by-term.
struct OodRoll {
  VirtualTrajectory vt;
  std::vector<Vec> x;        // InD iterates, 0..K
  std::vector<Vec> ood;      // x_k + s_k, 0..K
  std::vector<Vec> g_ind;    // grad f(x_k), 0..K-1
  std::vector<Vec> g_ood;    // grad f'(x_k + s_k), 0..K-1
  Vec x_star;                // InD minimizer (Cholesky oracle)
  Vec s_star;                // x'* - x* = -t
  double f_opt = 0.0;        // F'(x* + s*)
  double c1 = 0.0, c2 = 0.0;
};

OodRoll roll_ood_scenario(const OodScenario& sc);

// ||d(z') - d(z)|| <= C sqrt(n_out) ||z' - z|| over supplied input pairs.
TheoryReport check_mvt_residual(const std::function<Vec(const Vec&)>& net, double c,
                                std::size_t n_out,
                                const std::vector<std::pair<Vec, Vec>>& pairs);
TheoryReport check_mvt_residual_randomized(std::size_t trials, std::uint64_t seed);

// Per-iteration descent for update steps inside the admissible sets
// (N1 = lam * 1 with lam in [0, 1/L]; ||N2|| <= ||grad|| cos(theta)/L).
TheoryReport check_lemma1(const ProblemInstance& p, std::size_t trials, std::uint64_t seed);
TheoryReport check_lemma1_randomized(std::size_t trials, std::uint64_t seed);

// F(x_K) - F* <= (L / 2K) ||x0 - x*||^2 for gradient descent with step 1/L.
struct RateCheckResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // normalized slack (RHS - LHS) / max(1, |RHS|)
};
RateCheckResult corollary1_rate_case(const ProblemInstance& p, const Vec& x0,
                                     std::size_t k_steps);
TheoryReport check_corollary1_rate(std::size_t instances, std::size_t k_steps,
                                   std::uint64_t seed);

// Per-iteration OOD degradation bound (the ||s'||-relaxed form) along a
// scenario roll.
TheoryReport check_theorem1_gain(const OodScenario& sc);
TheoryReport check_theorem1_gain_randomized(std::size_t scenarios, std::uint64_t seed);

// Multi-iteration OOD rate bounds (both displayed forms) for a scenario.
TheoryReport check_theorem2_rate(const OodScenario& sc);
TheoryReport check_theorem2_rate_randomized(std::size_t scenarios, std::uint64_t seed);

// Composite-case objective comparison lemma via the gradient map, plus the
// in-distribution prox-gradient rate.
TheoryReport check_composite_lemma(const ProblemInstance& p, std::size_t trials,
                                   std::uint64_t seed);
TheoryReport check_composite_lemma_randomized(std::size_t trials, std::uint64_t seed);

// Closed-form comparison of the gradient-history and variable-history
// per-iteration degradation bounds with subgradient terms zeroed.
struct HistoryBoundTerms {
  std::size_t n = 1;
  double smoothness = 1.0;
  double grad_norm = 0.0;         // ||grad f'(x+s) + g'||
  double subgrad_diff_norm = 0.0; // ||g' - g||
  double s1_norm = 0.0;           // ||s_{k-1}||
  double s2_norm = 0.0;           // ||s_{k-2}||
  double s1_plus_t_norm = 0.0;    // ||s_{k-1} + t||
  double x_diff_norm = 0.0;       // ||x_{k-1}+s_{k-1} - x_{k-2}-s_{k-2}||
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
  double c4_gradient = 0.0;
  double c4_variable = 0.0;
};

struct HistoryBounds {
  double gradient_bound = 0.0;
  double variable_bound = 0.0;
};

HistoryBounds compare_history_bounds(const HistoryBoundTerms& t);
TheoryReport check_history_bounds_randomized(std::size_t samples, std::uint64_t seed);

// Trial counts for the full verification suite; zeros produce empty reports.
struct TheorySuiteConfig {
  std::size_t mvt_trials = 1000;
  std::size_t lemma1_trials = 10000;
  std::size_t corollary1_instances = 100;
  std::size_t theorem1_scenarios = 100;
  std::size_t theorem2_scenarios = 100;
  std::size_t composite_trials = 1000;
  std::size_t history_samples = 10000;
  std::uint64_t seed = 0;
};

std::vector<TheoryReport> run_theory_suite(const TheorySuiteConfig& cfg);

}  // namespace goml2o

#endif  // GOML2O_THEORY_HPP
