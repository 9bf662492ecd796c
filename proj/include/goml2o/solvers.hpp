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

#ifndef GOML2O_SOLVERS_HPP
#define GOML2O_SOLVERS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "goml2o/problems.hpp"

namespace goml2o {

struct SolverTrajectory {
  std::vector<Vec> iterates;   // x_0 .. x_K
  Vec objectives;              // F(x_k), recomputable exactly via objective()
  Vec grad_norms;              // ||grad f(x_k)||
  std::int64_t wall_ns = 0;
  std::string solver_name;
  std::string config;

  std::size_t steps() const { return iterates.empty() ? 0 : iterates.size() - 1; }
};

// Proximal gradient descent with fixed step 1/L.
SolverTrajectory run_ista(const ProblemInstance& p, const Vec& x0, std::size_t k_steps);

// FISTA: t_1 = 1, t_{k+1} = (1 + sqrt(1 + 4 t_k^2))/2, prox step at the
// extrapolated point with step 1/L.
SolverTrajectory run_fista(const ProblemInstance& p, const Vec& x0, std::size_t k_steps);

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double beta_hd = 0.0;  // hypergradient rate; 0 disables the adaptation
};

// Adam on the composite objective, using grad f + lambda * sign(x + t)
// with sign(0) = 0 for the l1 part.
SolverTrajectory run_adam(const ProblemInstance& p, const Vec& x0, std::size_t k_steps,
                          const AdamConfig& cfg = {});

// Adam with hypergradient learning-rate adaptation:
// lr <- lr + beta_hd * g_k^T u_{k-1}, u the previously applied direction.
SolverTrajectory run_adamhd(const ProblemInstance& p, const Vec& x0, std::size_t k_steps,
                            double lr0 = 0.01, double beta_hd = 1e-7);

}  // namespace goml2o

#endif  // GOML2O_SOLVERS_HPP
