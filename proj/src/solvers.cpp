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

#include "goml2o/solvers.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "goml2o/common.hpp"
#include "goml2o/numeric.hpp"

namespace goml2o {

namespace {

class WallTimer {
 public:
  WallTimer() : start_(std::chrono::steady_clock::now()) {}
  std::int64_t elapsed_ns() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void record(SolverTrajectory& traj, const ProblemInstance& p, const Vec& x) {
  traj.iterates.push_back(x);
  traj.objectives.push_back(objective(p, x));
  traj.grad_norms.push_back(norm2(smooth_gradient(p, x)));
}

Vec composite_subgradient(const ProblemInstance& p, const Vec& x) {
  Vec g = smooth_gradient(p, x);
  if (p.lambda > 0.0) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += p.lambda * sign0(x[i] + p.translation(i));
    }
  }
  return g;
}

}  // namespace

SolverTrajectory run_ista(const ProblemInstance& p, const Vec& x0, std::size_t k_steps) {
  WallTimer timer;
  SolverTrajectory traj;
  traj.solver_name = "ista";
  traj.config = "step=1/L";
  const double inv_l = 1.0 / p.smoothness;
  const Vec thresholds(p.dim(), p.lambda * inv_l);
  Vec x = x0;
  record(traj, p, x);
  for (std::size_t k = 0; k < k_steps; ++k) {
    Vec g = smooth_gradient(p, x);
    Vec xbar(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) xbar[i] = x[i] - inv_l * g[i];
    x = prox_l1(xbar, thresholds, p.translation_t);
    record(traj, p, x);
  }
  traj.wall_ns = timer.elapsed_ns();
  return traj;
}

SolverTrajectory run_fista(const ProblemInstance& p, const Vec& x0, std::size_t k_steps) {
  WallTimer timer;
  SolverTrajectory traj;
  traj.solver_name = "fista";
  traj.config = "step=1/L";
  const double inv_l = 1.0 / p.smoothness;
  const Vec thresholds(p.dim(), p.lambda * inv_l);
  Vec x_prev = x0;
  Vec y = x0;
  double t_k = 1.0;
  record(traj, p, x_prev);
  for (std::size_t k = 0; k < k_steps; ++k) {
    Vec g = smooth_gradient(p, y);
    Vec xbar(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) xbar[i] = y[i] - inv_l * g[i];
    Vec x = prox_l1(xbar, thresholds, p.translation_t);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_k * t_k));
    const double beta = (t_k - 1.0) / t_next;
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + beta * (x[i] - x_prev[i]);
    t_k = t_next;
    x_prev = std::move(x);
    record(traj, p, x_prev);
  }
  traj.wall_ns = timer.elapsed_ns();
  return traj;
}

SolverTrajectory run_adam(const ProblemInstance& p, const Vec& x0, std::size_t k_steps,
                          const AdamConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw UsageError("run_adam: lr must be > 0");
  WallTimer timer;
  SolverTrajectory traj;
  traj.solver_name = cfg.beta_hd == 0.0 ? "adam" : "adamhd";
  {
    std::ostringstream os;
    os << "lr=" << cfg.lr << ",beta1=" << cfg.beta1 << ",beta2=" << cfg.beta2
       << ",eps=" << cfg.eps << ",beta_hd=" << cfg.beta_hd;
    traj.config = os.str();
  }
  const std::size_t n = p.dim();
  Vec x = x0;
  Vec m(n, 0.0), v(n, 0.0);
  Vec prev_dir(n, 0.0);  // direction applied at the previous step
  double lr = cfg.lr;
  record(traj, p, x);
  for (std::size_t k = 1; k <= k_steps; ++k) {
    Vec g = composite_subgradient(p, x);
    // Hypergradient update first: aligns lr with how well the previous
    // direction matches the current gradient.
    if (cfg.beta_hd != 0.0 && k > 1) {
      lr += cfg.beta_hd * dot(g, prev_dir);
      if (!(lr > 0.0)) lr = 0.0;
    }
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(k));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(k));
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double dir = (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.eps);
      x[i] -= lr * dir;
      prev_dir[i] = dir;
    }
    record(traj, p, x);
  }
  traj.wall_ns = timer.elapsed_ns();
  return traj;
}

SolverTrajectory run_adamhd(const ProblemInstance& p, const Vec& x0, std::size_t k_steps,
                            double lr0, double beta_hd) {
  AdamConfig cfg;
  cfg.lr = lr0;
  cfg.beta_hd = beta_hd;
  return run_adam(p, x0, k_steps, cfg);
}

}  // namespace goml2o
