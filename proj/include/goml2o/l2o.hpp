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

#ifndef GOML2O_L2O_HPP
#define GOML2O_L2O_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "goml2o/autodiff.hpp"
#include "goml2o/common.hpp"
#include "goml2o/problems.hpp"
#include "goml2o/solvers.hpp"

namespace goml2o {

enum class Activation { kSigmoid, kSoftplus };
enum class GradMapVariant { kStd, kLh, kLhNoR };
enum class QShrink { kNone, kInvSqrtL, kInvL, kInvL2 };

std::string to_string(Activation a);
std::string to_string(GradMapVariant v);
std::string to_string(QShrink q);
Activation activation_from_string(const std::string& s);
GradMapVariant gradmap_from_string(const std::string& s);
QShrink q_shrink_from_string(const std::string& s);

// Returns the divisor {1, sqrt(L), L, L^2} for a Q-shrink setting.
double q_shrink_divisor(QShrink q, double smoothness);

struct L2OArch {
  std::size_t input_size = 3;   // grad, subgrad lower bound, subgrad upper bound
  std::size_t hidden_size = 20;
  Activation activation = Activation::kSigmoid;
  GradMapVariant gradmap = GradMapVariant::kLhNoR;
  QShrink q_shrink = QShrink::kNone;
  double scale_r = 2.0;
  double scale_q = 2.0;
  double scale_b = 1.0;
  // The learned step matrix is divided by the instance's smoothness constant
  // so the untrained emitted step sizes already bracket the stable 1/L range.
  bool scale_r_by_l = true;
};

// Byte offsets of each weight array inside the flat weight vector. The order
// here is also the serialization order of the checkpoint file.
struct WeightLayout {
  std::size_t lstm1_wi, lstm1_wh, lstm1_b;
  std::size_t lstm2_wi, lstm2_wh, lstm2_b;
  std::size_t inner_w, inner_b;
  std::size_t head_r_w, head_r_b;
  std::size_t head_q_w, head_q_b;
  std::size_t head_b_w, head_b_b;
  std::size_t total;

  static WeightLayout make(const L2OArch& arch);
  std::vector<std::pair<std::string, std::size_t>> named_sizes(const L2OArch& arch) const;
};

// All learnable weights of the coordinate-wise two-layer recurrent model
// plus its architecture hyperparameters. One bundle serves every coordinate
// of every problem.
struct L2OParameterBundle {
  L2OArch arch;
  Vec weights;

  WeightLayout layout() const { return WeightLayout::make(arch); }
  std::size_t weight_count() const { return weights.size(); }

  // Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per array.
  static L2OParameterBundle init(const L2OArch& arch, std::uint64_t seed);

  void save(const std::string& path) const;
  static L2OParameterBundle load(const std::string& path);
};

// Per-rollout state: per-coordinate recurrent cells, the gradient-history
// vector v (v_0 = 0), the previous gradient map, and the feature normalizers
// captured at the initial point (guarded below by 1e-12).
template <typename S>
struct L2ORollState {
  std::vector<S> x;
  std::vector<S> v;
  std::vector<S> g_prev;
  std::vector<S> h1, c1, h2, c2;  // n * hidden each
  std::array<double, 3> norms0{1.0, 1.0, 1.0};
};

using L2OState = L2ORollState<double>;

inline constexpr double kNormFloor = 1e-12;

namespace detail {

template <typename S>
S make_scalar(ad::Tape* tape, double v);

template <>
inline double make_scalar<double>(ad::Tape*, double v) {
  return v;
}

template <>
inline ad::Val make_scalar<ad::Val>(ad::Tape* tape, double v) {
  return tape->leaf(v);
}

}  // namespace detail

// A bundle bound to one problem instance for rolling out, with weights
// materialized as scalars of type S (tape leaves when S is ad::Val).
template <typename S>
struct L2ORun {
  const ProblemInstance* p = nullptr;
  L2OArch arch;
  WeightLayout lay{};
  std::vector<S> w;
  ad::Tape* tape = nullptr;

  // scratch reused across steps
  std::vector<S> scratch_h, scratch_c, scratch_inner, scratch_feat;

  static L2ORun bind(const L2OParameterBundle& bundle, const ProblemInstance& p,
                     ad::Tape* tape) {
    L2ORun run;
    run.p = &p;
    run.arch = bundle.arch;
    run.lay = bundle.layout();
    run.tape = tape;
    run.w.reserve(bundle.weights.size());
    for (double v : bundle.weights) run.w.push_back(detail::make_scalar<S>(tape, v));
    const std::size_t hid = run.arch.hidden_size;
    run.scratch_h.resize(hid);
    run.scratch_c.resize(hid);
    run.scratch_inner.resize(hid);
    run.scratch_feat.resize(run.arch.input_size);
    return run;
  }
};

namespace detail {

// One LSTM cell over all coordinates is evaluated coordinate-by-coordinate
// with shared weights; this computes a single coordinate. Gate order i,f,g,o.
template <typename S>
void lstm_cell(std::span<const S> w_i, std::span<const S> w_h, std::span<const S> bias,
               std::span<const S> x, std::span<const S> h_in, std::span<const S> c_in,
               std::span<S> h_out, std::span<S> c_out, std::size_t in_size,
               std::size_t hid) {
  for (std::size_t u = 0; u < hid; ++u) {
    S gate[4];
    for (std::size_t g = 0; g < 4; ++g) {
      const std::size_t row = g * hid + u;
      S acc = bias[row];
      const S* wi = &w_i[row * in_size];
      for (std::size_t j = 0; j < in_size; ++j) acc = ad_fma(wi[j], x[j], acc);
      const S* wh = &w_h[row * hid];
      for (std::size_t j = 0; j < hid; ++j) acc = ad_fma(wh[j], h_in[j], acc);
      gate[g] = acc;
    }
    const S i_g = ad_sigmoid(gate[0]);
    const S f_g = ad_sigmoid(gate[1]);
    const S g_g = ad_tanh(gate[2]);
    const S o_g = ad_sigmoid(gate[3]);
    c_out[u] = ad_fma(f_g, c_in[u], i_g * g_g);
    h_out[u] = o_g * ad_tanh(c_out[u]);
  }
}

template <typename S>
S head_activation(const L2OArch& arch, S pre) {
  return arch.activation == Activation::kSigmoid ? ad_sigmoid(pre) : ad_softplus(pre);
}

// Network emission for one coordinate: feature triple -> LSTM1 -> LSTM2 ->
// inner affine -> three heads -> activation * scale (with the configured
// L-shrinks folded into r_mult / q_mult). Updates the coordinate's
// recurrent state slices in place.
template <typename S>
void emit_for_coordinate(const L2OArch& arch, const WeightLayout& lay,
                         std::span<const S> w, std::span<const S> feat,
                         std::span<S> h1, std::span<S> c1, std::span<S> h2,
                         std::span<S> c2, std::vector<S>& h_new, std::vector<S>& c_new,
                         std::vector<S>& inner, double r_mult, double q_mult,
                         double b_mult, S* r_out, S* q_out, S* b_out) {
  const std::size_t hid = arch.hidden_size;
  auto seg = [&](std::size_t off, std::size_t len) { return w.subspan(off, len); };
  lstm_cell<S>(seg(lay.lstm1_wi, 4 * hid * arch.input_size), seg(lay.lstm1_wh, 4 * hid * hid),
               seg(lay.lstm1_b, 4 * hid), feat, std::span<const S>(h1),
               std::span<const S>(c1), std::span<S>(h_new), std::span<S>(c_new),
               arch.input_size, hid);
  std::copy(h_new.begin(), h_new.end(), h1.begin());
  std::copy(c_new.begin(), c_new.end(), c1.begin());

  lstm_cell<S>(seg(lay.lstm2_wi, 4 * hid * hid), seg(lay.lstm2_wh, 4 * hid * hid),
               seg(lay.lstm2_b, 4 * hid), std::span<const S>(h1), std::span<const S>(h2),
               std::span<const S>(c2), std::span<S>(h_new), std::span<S>(c_new), hid, hid);
  std::copy(h_new.begin(), h_new.end(), h2.begin());
  std::copy(c_new.begin(), c_new.end(), c2.begin());

  for (std::size_t u = 0; u < hid; ++u) {
    S acc = w[lay.inner_b + u];
    const S* wr = &w[lay.inner_w + u * hid];
    for (std::size_t j = 0; j < hid; ++j) acc = ad_fma(wr[j], h2[j], acc);
    inner[u] = acc;
  }

  auto head = [&](std::size_t w_off, std::size_t b_off) {
    S acc = w[b_off];
    const S* wr = &w[w_off];
    for (std::size_t j = 0; j < hid; ++j) acc = ad_fma(wr[j], inner[j], acc);
    return head_activation(arch, acc);
  };
  *r_out = ad_scale(head(lay.head_r_w, lay.head_r_b), r_mult);
  *q_out = ad_scale(head(lay.head_q_w, lay.head_q_b), q_mult);
  *b_out = ad_scale(head(lay.head_b_w, lay.head_b_b), b_mult);
}

// Post-emission tail of one step for a single coordinate: move to
// xbar = x - R grad - Q v, prox with threshold lambda * R under the
// translated l1, recover the gradient map per variant, update the history.
template <typename S>
struct CoordStep {
  S x_next, v_next, g_map;
};

template <typename S>
CoordStep<S> prox_update_coord(double lambda, double t_i, GradMapVariant variant, S x_i,
                               S grad_i, S v_i, S g_prev_i, S r_i, S q_i, S b_i) {
  if (!(ad_primal(r_i) > 0.0)) {
    throw NumericError("l2o step: emitted R entry is not positive");
  }
  const S xbar = x_i - r_i * grad_i - q_i * v_i;
  const S u_shift = ad_shift(xbar, t_i);
  const double s = sign0(ad_primal(u_shift));
  const S thr = ad_scale(r_i, lambda);
  CoordStep<S> out;
  out.x_next = ad_shift(ad_scale(ad_max0(ad_scale(u_shift, s) - thr), s), -t_i);
  S g_map = x_i - out.x_next;  // LHNoR
  if (variant == GradMapVariant::kStd) {
    g_map = (g_map - q_i * v_i) / r_i;
  } else if (variant == GradMapVariant::kLh) {
    g_map = g_map / r_i;
  }
  out.v_next = ad_rsub(1.0, b_i) * g_map + b_i * g_prev_i;
  out.g_map = g_map;
  return out;
}

// Smooth gradient of the (possibly translated) objective, differentiable in x.
template <typename S>
void smooth_gradient_core(const ProblemInstance& p, std::span<const S> x,
                          std::vector<S>& grad_out, std::vector<S>& row_scratch) {
  const std::size_t n = p.dim();
  const std::size_t m = p.num_rows();
  row_scratch.clear();
  row_scratch.reserve(m);
  const bool logistic = p.kind == ProblemKind::kLogistic;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = p.a.data.data() + i * n;
    S acc = ad_scale(x[0], row[0]);
    for (std::size_t j = 1; j < n; ++j) acc = ad_fma_const(x[j], row[j], acc);
    double shift = -p.b[i];
    if (p.is_translated() && !logistic) {
      // fold A t into the residual constant for the quadratic case
      double at = 0.0;
      for (std::size_t j = 0; j < n; ++j) at += row[j] * p.translation_t[j];
      shift += at;
    }
    if (logistic) {
      if (p.is_translated()) {
        double at = 0.0;
        for (std::size_t j = 0; j < n; ++j) at += row[j] * p.translation_t[j];
        acc = ad_shift(acc, at);
      }
      row_scratch.push_back(ad_scale(ad_shift(ad_sigmoid(acc), -p.b[i]), inv_m));
    } else {
      row_scratch.push_back(ad_shift(acc, shift));
    }
  }
  grad_out.clear();
  grad_out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    S acc = ad_scale(row_scratch[0], p.a.at(0, j));
    for (std::size_t i = 1; i < m; ++i) acc = ad_fma_const(row_scratch[i], p.a.at(i, j), acc);
    grad_out.push_back(acc);
  }
}

// Full objective F(x), differentiable in x.
template <typename S>
S objective_core(const ProblemInstance& p, std::span<const S> x, ad::Tape* tape) {
  const std::size_t n = p.dim();
  const std::size_t m = p.num_rows();
  const bool logistic = p.kind == ProblemKind::kLogistic;
  S total = detail::make_scalar<S>(tape, 0.0);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = p.a.data.data() + i * n;
    S acc = ad_scale(x[0], row[0]);
    for (std::size_t j = 1; j < n; ++j) acc = ad_fma_const(x[j], row[j], acc);
    double at = 0.0;
    if (p.is_translated()) {
      for (std::size_t j = 0; j < n; ++j) at += row[j] * p.translation_t[j];
    }
    if (logistic) {
      const S z = ad_shift(acc, at);
      // b*softplus(-z) + (1-b)*softplus(z), scaled by 1/m
      S term = p.b[i] == 1.0 ? ad_softplus(-z) : ad_softplus(z);
      total = ad_fma_const(term, inv_m, total);
    } else {
      const S r = ad_shift(acc, at - p.b[i]);
      total = ad_fma_const(r * r, 0.5, total);
    }
  }
  if (p.lambda > 0.0) {
    for (std::size_t j = 0; j < n; ++j) {
      const S xs = ad_shift(x[j], p.translation(j));
      total = ad_fma_const(ad_max0(xs) + ad_max0(-xs), p.lambda, total);
    }
  }
  return total;
}

}  // namespace detail

// Initializes the rollout state at x0: zero recurrent cells, v = 0,
// G_prev = 0, and the three feature normalizers from x0.
template <typename S>
L2ORollState<S> l2o_init_state(L2ORun<S>& run, const Vec& x0) {
  const ProblemInstance& p = *run.p;
  if (x0.size() != p.dim()) throw UsageError("l2o_init_state: dimension mismatch");
  L2ORollState<S> st;
  const std::size_t n = p.dim();
  const std::size_t hid = run.arch.hidden_size;
  st.x.reserve(n);
  for (double v : x0) st.x.push_back(detail::make_scalar<S>(run.tape, v));
  const S zero = detail::make_scalar<S>(run.tape, 0.0);
  st.v.assign(n, zero);
  st.g_prev.assign(n, zero);
  st.h1.assign(n * hid, zero);
  st.c1.assign(n * hid, zero);
  st.h2.assign(n * hid, zero);
  st.c2.assign(n * hid, zero);

  const Vec g0 = smooth_gradient(p, x0);
  const SubgradientBounds sb = subgradient_bounds(p, x0);
  st.norms0[0] = std::max(norm2(g0), kNormFloor);
  st.norms0[1] = std::max(norm2(sb.lb), kNormFloor);
  st.norms0[2] = std::max(norm2(sb.ub), kNormFloor);
  return st;
}

// One optimizer step: emit (R, Q, B) coordinate-wise from the recurrent
// nets, move to xbar = x - R.grad - Q.v, prox in the R^-1 metric, recover
// the gradient map per the configured variant, and update the history v.
template <typename S>
void l2o_step_core(L2ORun<S>& run, L2ORollState<S>& st) {
  const ProblemInstance& p = *run.p;
  const L2OArch& arch = run.arch;
  const std::size_t n = p.dim();
  const std::size_t hid = arch.hidden_size;
  const double l_const = p.smoothness;
  const double r_mult = arch.scale_r / (arch.scale_r_by_l ? l_const : 1.0);
  const double q_mult = arch.scale_q / q_shrink_divisor(arch.q_shrink, l_const);

  std::vector<S> grad;
  std::vector<S> rows;
  detail::smooth_gradient_core(p, std::span<const S>(st.x), grad, rows);

  Vec x_primal(n);
  for (std::size_t i = 0; i < n; ++i) x_primal[i] = ad_primal(st.x[i]);
  const SubgradientBounds sb = subgradient_bounds(p, x_primal);

  const double inv_n0 = 1.0 / st.norms0[0];
  const double inv_n1 = 1.0 / st.norms0[1];
  const double inv_n2 = 1.0 / st.norms0[2];

  std::vector<S> h_new(hid), c_new(hid);
  std::vector<S>& feat = run.scratch_feat;
  std::vector<S>& inner = run.scratch_inner;
  const std::span<const S> w(run.w);
  const WeightLayout& lay = run.lay;

  for (std::size_t i = 0; i < n; ++i) {
    feat[0] = ad_scale(grad[i], inv_n0);
    feat[1] = detail::make_scalar<S>(run.tape, sb.lb[i] * inv_n1);
    feat[2] = detail::make_scalar<S>(run.tape, sb.ub[i] * inv_n2);

    S r_i, q_i, b_i;
    detail::emit_for_coordinate<S>(arch, lay, w, std::span<const S>(feat),
                                   std::span<S>(&st.h1[i * hid], hid),
                                   std::span<S>(&st.c1[i * hid], hid),
                                   std::span<S>(&st.h2[i * hid], hid),
                                   std::span<S>(&st.c2[i * hid], hid), h_new, c_new,
                                   inner, r_mult, q_mult, arch.scale_b, &r_i, &q_i,
                                   &b_i);

    // xbar_i = x_i - R_i grad_i - Q_i v_i, then the translated l1 prox with
    // threshold lambda * R_i.
    const detail::CoordStep<S> cs = detail::prox_update_coord<S>(
        p.lambda, p.translation(i), arch.gradmap, st.x[i], grad[i], st.v[i], st.g_prev[i],
        r_i, q_i, b_i);
    st.v[i] = cs.v_next;
    st.g_prev[i] = cs.g_map;
    st.x[i] = cs.x_next;
  }
}

template <typename S>
S l2o_objective(L2ORun<S>& run, const L2ORollState<S>& st) {
  return detail::objective_core<S>(*run.p, std::span<const S>(st.x), run.tape);
}

// --- double-path operations (the public module surface) ---

// Per-coordinate normalized feature triples, n x 3 row-major.
std::vector<double> build_features(const ProblemInstance& p, const Vec& x,
                                   const L2OState& state);

// Forward pass through the recurrent nets for explicit features; mutates the
// recurrent state. features is n x 3 row-major.
struct EmittedParams {
  Vec r_diag;
  Vec q_diag;
  Vec b_diag;
};
EmittedParams emit_parameters(const L2OParameterBundle& bundle,
                              const std::vector<double>& features, L2OState& state,
                              double smoothness);

// One update step from x_prev held in `state`; returns the new iterate.
Vec l2o_step(const ProblemInstance& p, const L2OParameterBundle& bundle, L2OState& state);

// The Theorem-3 update with explicitly supplied diagonals, bypassing the
// networks; used to pin the step equation against closed forms.
struct ParametricStepResult {
  Vec x_next;
  Vec v_next;
  Vec g_map;
};
ParametricStepResult l2o_parametric_step(const ProblemInstance& p, const Vec& x_prev,
                                         const Vec& v, const Vec& g_prev, const Vec& r_diag,
                                         const Vec& q_diag, const Vec& b_diag,
                                         GradMapVariant variant);

// Rolls out K steps from x0; throws NumericError naming the step index if an
// iterate becomes non-finite.
SolverTrajectory run_l2o(const ProblemInstance& p, const Vec& x0, std::size_t k_steps,
                         const L2OParameterBundle& bundle);

// Same rollout but saturating: on the first non-finite iterate the remaining
// objectives are +inf and `diverged_at` reports the step. Used by
// evaluation, which must compare against models that blow up.
struct L2ORolloutResult {
  SolverTrajectory trajectory;
  std::optional<std::size_t> diverged_at;
};
L2ORolloutResult run_l2o_saturating(const ProblemInstance& p, const Vec& x0,
                                    std::size_t k_steps, const L2OParameterBundle& bundle);

}  // namespace goml2o

#endif  // GOML2O_L2O_HPP
