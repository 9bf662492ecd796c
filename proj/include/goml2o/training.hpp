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

#ifndef GOML2O_TRAINING_HPP
#define GOML2O_TRAINING_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "goml2o/common.hpp"
#include "goml2o/l2o.hpp"
#include "goml2o/problems.hpp"

namespace goml2o {

enum class LossKind { kMean, kWeightedSum };

std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

struct TrainConfig {
  std::size_t total_steps_per_problem = 100;
  std::size_t bp_every = 20;
  std::size_t epochs = 1;
  double lr = 0.01;
  double lr_decay_per_epoch = 0.1;
  std::size_t batch_size = 128;
  LossKind loss = LossKind::kMean;
  double grad_clip_norm = 1.0;
  std::size_t eval_every = 20;  // optimizer updates between validation evals
  // Scale of the random rollout start points, x0 ~ N(0, scale^2 I); zero
  // starts every rollout at the origin like evaluation does.
  double x0_scale = 1.0;
  // When > 1, each epoch is split into this many equal phases and the
  // per-epoch decay applies between phases; compresses a multi-epoch decay
  // schedule into fewer epochs.
  std::size_t decay_phases_per_epoch = 1;
  // Adam moment constants for the weight updates.
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  std::uint64_t seed = 0;

  void validate() const;
};

// Mean or index-weighted-sum of the objective values of one BP segment.
// mean:        (1/T) sum F(x_i)
// weighted:    sum_i i * F(x_i) / sum_i i      (i = 1..T)
template <typename S>
S segment_loss(std::span<const S> objectives, LossKind kind) {
  if (objectives.empty()) throw UsageError("segment_loss: empty segment");
  const std::size_t t = objectives.size();
  S acc = objectives[0];
  if (kind == LossKind::kMean) {
    for (std::size_t i = 1; i < t; ++i) acc = acc + objectives[i];
    return ad_scale(acc, 1.0 / static_cast<double>(t));
  }
  const double denom = 0.5 * static_cast<double>(t) * static_cast<double>(t + 1);
  acc = ad_scale(objectives[0], 1.0 / denom);
  for (std::size_t i = 1; i < t; ++i) {
    acc = acc + ad_scale(objectives[i], static_cast<double>(i + 1) / denom);
  }
  return acc;
}

// Clamp the global (whole-vector) norm to `clip`; vectors already within
// the budget are untouched.
void clip_gradient(Vec& g, double clip);

struct TrainLogRow {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  std::size_t segment = 0;
  double loss = 0.0;
  double val_metric_at_end = 0.0;  // NaN when no eval ran on this row
  std::int64_t wall_ns = 0;
};

struct TrainResult {
  L2OParameterBundle bundle;
  std::vector<TrainLogRow> log;
};

// Trains by truncated backpropagation through the unrolled optimizer:
// 100-step rollouts, a segment loss every bp_every steps averaged over the
// minibatch, global gradient-norm clipping at 1.0, one Adam update per
// segment, per-epoch learning-rate decay.
TrainResult train(const std::vector<ProblemInstance>& dataset, const TrainConfig& cfg,
                  const L2OParameterBundle& initial,
                  const std::vector<ProblemInstance>& val_set = {});

// Gradient of the averaged segment losses for one full rollout over
// `problems`, with one entry per segment; used by tests to pin the
// truncation semantics. No weight updates are applied.
std::vector<Vec> rollout_segment_gradients(const std::vector<ProblemInstance>& problems,
                                           const std::vector<Vec>& x0s,
                                           const TrainConfig& cfg,
                                           const L2OParameterBundle& bundle,
                                           bool single_tape_with_detach);

// Normalized-objective machinery shared by evaluation and the CLI.
struct LabeledProblem {
  ProblemInstance problem;
  Label label;
};

std::vector<LabeledProblem> label_problems(const std::vector<ProblemInstance>& ps);

// (F(x_k) - F*) / max(F*, 1e-12), floored at 1e-16 per point.
Vec metric_curve(const SolverTrajectory& traj, const Label& label);

// Mean normalized-objective curve of the bundle over the evaluation set,
// rolled out K steps from x0 = 0. Divergence saturates to +inf.
Vec evaluate(const L2OParameterBundle& bundle, const std::vector<LabeledProblem>& eval_set,
             std::size_t k_steps);

// Same curve for a classical solver by name ("ista", "fista", "adam",
// "adamhd").
Vec evaluate_solver(const std::string& solver, const std::vector<LabeledProblem>& eval_set,
                    std::size_t k_steps, const Vec* shift_s0 = nullptr);

// Curve for the bundle with an optional initial-point shift.
Vec evaluate_bundle(const L2OParameterBundle& bundle,
                    const std::vector<LabeledProblem>& eval_set, std::size_t k_steps,
                    const Vec* shift_s0 = nullptr);

}  // namespace goml2o

#endif  // GOML2O_TRAINING_HPP
