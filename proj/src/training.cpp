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

#include "goml2o/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "goml2o/common.hpp"
#include "goml2o/rng.hpp"

namespace goml2o {

std::string to_string(LossKind k) { return k == LossKind::kMean ? "mean" : "weighted_sum"; }

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "mean") return LossKind::kMean;
  if (s == "weighted_sum") return LossKind::kWeightedSum;
  throw UsageError("unknown loss kind: " + s);
}

void TrainConfig::validate() const {
  if (total_steps_per_problem == 0 || bp_every == 0) {
    throw UsageError("train config: step counts must be positive");
  }
  if (total_steps_per_problem % bp_every != 0) {
    throw UsageError("train config: bp_every must divide total_steps_per_problem");
  }
  if (!(grad_clip_norm > 0.0)) throw UsageError("train config: grad_clip_norm must be > 0");
  if (!(lr > 0.0)) throw UsageError("train config: lr must be > 0");
  if (batch_size == 0) throw UsageError("train config: batch_size must be >= 1");
}

namespace {

using ad::Tape;
using ad::Val;

// Plain-double snapshot of a rollout state, carried across BP segments.
struct CarriedState {
  Vec x, v, g_prev, h1, c1, h2, c2;
  std::array<double, 3> norms0;
};

CarriedState snapshot(const L2ORollState<Val>& st) {
  CarriedState c;
  auto vals = [](const std::vector<Val>& xs) {
    Vec out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i].value();
    return out;
  };
  c.x = vals(st.x);
  c.v = vals(st.v);
  c.g_prev = vals(st.g_prev);
  c.h1 = vals(st.h1);
  c.c1 = vals(st.c1);
  c.h2 = vals(st.h2);
  c.c2 = vals(st.c2);
  c.norms0 = st.norms0;
  return c;
}

L2ORollState<Val> restore(Tape& tape, const CarriedState& c) {
  L2ORollState<Val> st;
  auto leaves = [&](const Vec& xs) {
    std::vector<Val> out;
    out.reserve(xs.size());
    for (double v : xs) out.push_back(tape.leaf(v));
    return out;
  };
  st.x = leaves(c.x);
  st.v = leaves(c.v);
  st.g_prev = leaves(c.g_prev);
  st.h1 = leaves(c.h1);
  st.c1 = leaves(c.c1);
  st.h2 = leaves(c.h2);
  st.c2 = leaves(c.c2);
  st.norms0 = c.norms0;
  return st;
}

std::size_t tape_reserve_hint(const ProblemInstance& p, const L2OArch& arch,
                              std::size_t steps) {
  const std::size_t hid = arch.hidden_size;
  const std::size_t in = arch.input_size;
  const std::size_t per_coord = 4 * hid * (in + hid + 2) + 4 * hid * (2 * hid + 2) +
                                hid * (hid + 1) + 3 * (hid + 2) + 64;
  const std::size_t per_step =
      p.dim() * per_coord + 4 * p.dim() * p.num_rows() + 8 * p.num_rows() + 16 * p.dim() + 64;
  const std::size_t leaves = p.dim() * (3 + 4 * hid) + WeightLayout::make(arch).total + 4096;
  return steps * per_step + steps * per_step / 8 + leaves;
}

struct AdamOpt {
  Vec m, v;
  std::size_t t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  explicit AdamOpt(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void update(Vec& w, const Vec& g, double lr) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
};

// Rolls one BP segment for one problem on a fresh tape; accumulates
// d(segment loss)/d(weights) into grad_out scaled by `scale` and advances
// the carried state. Returns the loss value.
double roll_segment(const ProblemInstance& p, const L2OParameterBundle& bundle,
                    const TrainConfig& cfg, CarriedState& carried, Vec& grad_out,
                    double scale) {
  Tape tape(tape_reserve_hint(p, bundle.arch, cfg.bp_every));
  L2ORun<Val> run = L2ORun<Val>::bind(bundle, p, &tape);
  L2ORollState<Val> st = restore(tape, carried);
  std::vector<Val> objs;
  objs.reserve(cfg.bp_every);
  for (std::size_t s = 0; s < cfg.bp_every; ++s) {
    l2o_step_core<Val>(run, st);
    objs.push_back(l2o_objective(run, st));
  }
  const Val loss = segment_loss<Val>(std::span<const Val>(objs), cfg.loss);
  tape.backward(loss);
  for (std::size_t i = 0; i < run.w.size(); ++i) {
    grad_out[i] += scale * run.w[i].grad();
  }
  carried = snapshot(st);
  return loss.value();
}

}  // namespace

void clip_gradient(Vec& g, double clip) {
  const double n = norm2(g);
  if (n > clip) {
    const double s = clip / n;
    for (double& v : g) v *= s;
  }
}

TrainResult train(const std::vector<ProblemInstance>& dataset, const TrainConfig& cfg,
                  const L2OParameterBundle& initial,
                  const std::vector<ProblemInstance>& val_set) {
  cfg.validate();
  if (dataset.empty()) throw UsageError("train: dataset is empty");
  TrainResult result;
  result.bundle = initial;
  if (cfg.epochs == 0) return result;

  std::vector<LabeledProblem> val_labeled = label_problems(val_set);
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed_ns = [&] {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now() - t_start)
        .count();
  };

  const std::size_t w_count = result.bundle.weights.size();
  AdamOpt opt(w_count);
  opt.beta1 = cfg.adam_beta1;
  opt.beta2 = cfg.adam_beta2;
  const std::size_t segments = cfg.total_steps_per_problem / cfg.bp_every;
  const std::size_t n_problems = dataset.size();
  std::size_t updates = 0;

  const std::size_t phases = std::max<std::size_t>(cfg.decay_phases_per_epoch, 1);
  const std::size_t batches_per_epoch = (n_problems + cfg.batch_size - 1) / cfg.batch_size;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr_epoch = cfg.lr * std::pow(cfg.lr_decay_per_epoch, static_cast<double>(epoch));
    for (std::size_t batch_start = 0, batch_idx = 0; batch_start < n_problems;
         batch_start += cfg.batch_size, ++batch_idx) {
      const std::size_t phase = std::min(phases - 1, batch_idx * phases / batches_per_epoch);
      const double lr_e =
          lr_epoch * std::pow(cfg.lr_decay_per_epoch, static_cast<double>(phase));
      const std::size_t batch_n =
          std::min(cfg.batch_size, n_problems - batch_start);

      // Random initial point per (epoch, problem), fixed by the seed.
      std::vector<CarriedState> carried(batch_n);
      for (std::size_t j = 0; j < batch_n; ++j) {
        const ProblemInstance& p = dataset[batch_start + j];
        Rng rng = Rng::derive(cfg.seed, epoch * n_problems + batch_start + j);
        Vec x0 = rng.normal_vector(p.dim());
        for (double& v : x0) v *= cfg.x0_scale;
        L2ORun<double> tmp = L2ORun<double>::bind(result.bundle, p, nullptr);
        L2ORollState<double> st0 = l2o_init_state(tmp, x0);
        CarriedState c;
        c.x = st0.x;
        c.v = st0.v;
        c.g_prev = st0.g_prev;
        c.h1 = st0.h1;
        c.c1 = st0.c1;
        c.h2 = st0.h2;
        c.c2 = st0.c2;
        c.norms0 = st0.norms0;
        carried[j] = std::move(c);
      }

      for (std::size_t seg = 0; seg < segments; ++seg) {
        Vec grad(w_count, 0.0);
        double loss_sum = 0.0;
        const double scale = 1.0 / static_cast<double>(batch_n);
        for (std::size_t j = 0; j < batch_n; ++j) {
          const std::string where = "epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(batch_idx) + ", segment " +
                                    std::to_string(seg);
          double loss;
          try {
            loss = roll_segment(dataset[batch_start + j], result.bundle, cfg, carried[j],
                                grad, scale);
          } catch (const NumericError& e) {
            throw NumericError("train: " + std::string(e.what()) + " at " + where);
          } catch (const std::domain_error& e) {
            throw NumericError("train: " + std::string(e.what()) + " at " + where);
          }
          if (!std::isfinite(loss)) {
            throw NumericError("train: non-finite loss at " + where);
          }
          loss_sum += loss;
        }
        clip_gradient(grad, cfg.grad_clip_norm);
        opt.update(result.bundle.weights, grad, lr_e);
        ++updates;

        TrainLogRow row;
        row.epoch = epoch;
        row.batch = batch_idx;
        row.segment = seg;
        row.loss = loss_sum / static_cast<double>(batch_n);
        row.val_metric_at_end = std::numeric_limits<double>::quiet_NaN();
        if (!val_labeled.empty() && cfg.eval_every > 0 && updates % cfg.eval_every == 0) {
          const Vec curve = evaluate(result.bundle, val_labeled, cfg.total_steps_per_problem);
          row.val_metric_at_end = curve.back();
        }
        row.wall_ns = elapsed_ns();
        result.log.push_back(row);
      }
    }
  }
  return result;
}

std::vector<Vec> rollout_segment_gradients(const std::vector<ProblemInstance>& problems,
                                           const std::vector<Vec>& x0s,
                                           const TrainConfig& cfg,
                                           const L2OParameterBundle& bundle,
                                           bool single_tape_with_detach) {
  cfg.validate();
  if (problems.size() != x0s.size()) throw UsageError("rollout_segment_gradients: size mismatch");
  const std::size_t segments = cfg.total_steps_per_problem / cfg.bp_every;
  const std::size_t w_count = bundle.weights.size();
  std::vector<Vec> per_segment(segments, Vec(w_count, 0.0));
  const double scale = 1.0 / static_cast<double>(problems.size());

  if (!single_tape_with_detach) {
    for (std::size_t pi = 0; pi < problems.size(); ++pi) {
      const ProblemInstance& p = problems[pi];
      L2ORun<double> tmp = L2ORun<double>::bind(bundle, p, nullptr);
      L2ORollState<double> st0 = l2o_init_state(tmp, x0s[pi]);
      CarriedState carried{st0.x,  st0.v,  st0.g_prev, st0.h1,
                           st0.c1, st0.h2, st0.c2,     st0.norms0};
      for (std::size_t seg = 0; seg < segments; ++seg) {
        roll_segment(p, bundle, cfg, carried, per_segment[seg], scale);
      }
    }
    return per_segment;
  }

  for (std::size_t pi = 0; pi < problems.size(); ++pi) {
    const ProblemInstance& p = problems[pi];
    Tape tape(tape_reserve_hint(p, bundle.arch, cfg.total_steps_per_problem));
    L2ORun<Val> run = L2ORun<Val>::bind(bundle, p, &tape);
    // Match the fresh-tape variant: the rollout state enters each segment as
    // leaves, with truncation barriers between segments.
    L2ORun<double> tmp = L2ORun<double>::bind(bundle, p, nullptr);
    L2ORollState<double> st0 = l2o_init_state(tmp, x0s[pi]);
    CarriedState carried{st0.x,  st0.v,  st0.g_prev, st0.h1,
                         st0.c1, st0.h2, st0.c2,     st0.norms0};
    std::vector<Val> seg_losses;
    L2ORollState<Val> st = restore(tape, carried);
    for (std::size_t seg = 0; seg < segments; ++seg) {
      if (seg > 0) {
        const std::size_t cp = tape.checkpoint();
        tape.detach(cp);
        // Re-enter the state as leaves so the op stream matches the
        // fresh-tape run node for node.
        st = restore(tape, snapshot(st));
      }
      std::vector<Val> objs;
      objs.reserve(cfg.bp_every);
      for (std::size_t s = 0; s < cfg.bp_every; ++s) {
        l2o_step_core<Val>(run, st);
        objs.push_back(l2o_objective(run, st));
      }
      seg_losses.push_back(segment_loss<Val>(std::span<const Val>(objs), cfg.loss));
    }
    for (std::size_t seg = 0; seg < segments; ++seg) {
      tape.backward(seg_losses[seg]);
      for (std::size_t i = 0; i < run.w.size(); ++i) {
        per_segment[seg][i] += scale * run.w[i].grad();
      }
    }
  }
  return per_segment;
}

std::vector<LabeledProblem> label_problems(const std::vector<ProblemInstance>& ps) {
  std::vector<LabeledProblem> out;
  out.reserve(ps.size());
  for (const auto& p : ps) out.push_back({p, generate_label(p)});
  return out;
}

Vec metric_curve(const SolverTrajectory& traj, const Label& label) {
  Vec curve(traj.objectives.size());
  const double denom = std::max(label.f_star, 1e-12);
  for (std::size_t k = 0; k < curve.size(); ++k) {
    curve[k] = std::max((traj.objectives[k] - label.f_star) / denom, 1e-16);
  }
  return curve;
}

namespace {

Vec mean_curves(const std::vector<Vec>& curves) {
  if (curves.empty()) throw UsageError("evaluate: empty evaluation set");
  Vec mean(curves[0].size(), 0.0);
  for (const Vec& c : curves) {
    if (c.size() != mean.size()) throw UsageError("evaluate: curve length mismatch");
    for (std::size_t k = 0; k < c.size(); ++k) mean[k] += c[k];
  }
  const double inv = 1.0 / static_cast<double>(curves.size());
  for (double& v : mean) v *= inv;
  return mean;
}

Vec start_point(const ProblemInstance& p, const Vec* shift_s0) {
  Vec x0(p.dim(), 0.0);
  if (shift_s0) {
    if (shift_s0->size() != p.dim()) throw UsageError("evaluate: shift dimension mismatch");
    x0 = *shift_s0;
  }
  return x0;
}

}  // namespace

Vec evaluate_bundle(const L2OParameterBundle& bundle,
                    const std::vector<LabeledProblem>& eval_set, std::size_t k_steps,
                    const Vec* shift_s0) {
  std::vector<Vec> curves;
  curves.reserve(eval_set.size());
  for (const auto& lp : eval_set) {
    const Vec x0 = start_point(lp.problem, shift_s0);
    const L2ORolloutResult res = run_l2o_saturating(lp.problem, x0, k_steps, bundle);
    curves.push_back(metric_curve(res.trajectory, lp.label));
  }
  return mean_curves(curves);
}

Vec evaluate(const L2OParameterBundle& bundle, const std::vector<LabeledProblem>& eval_set,
             std::size_t k_steps) {
  return evaluate_bundle(bundle, eval_set, k_steps, nullptr);
}

Vec evaluate_solver(const std::string& solver, const std::vector<LabeledProblem>& eval_set,
                    std::size_t k_steps, const Vec* shift_s0) {
  std::vector<Vec> curves;
  curves.reserve(eval_set.size());
  for (const auto& lp : eval_set) {
    const Vec x0 = start_point(lp.problem, shift_s0);
    SolverTrajectory traj;
    if (solver == "ista") {
      traj = run_ista(lp.problem, x0, k_steps);
    } else if (solver == "fista") {
      traj = run_fista(lp.problem, x0, k_steps);
    } else if (solver == "adam") {
      traj = run_adam(lp.problem, x0, k_steps);
    } else if (solver == "adamhd") {
      traj = run_adamhd(lp.problem, x0, k_steps);
    } else {
      throw UsageError("unknown solver: " + solver);
    }
    curves.push_back(metric_curve(traj, lp.label));
  }
  return mean_curves(curves);
}

}  // namespace goml2o
