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

#include "goml2o/l2o.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "goml2o/common.hpp"
#include "goml2o/rng.hpp"

namespace goml2o {

std::string to_string(Activation a) {
  return a == Activation::kSigmoid ? "sigmoid" : "softplus";
}
std::string to_string(GradMapVariant v) {
  switch (v) {
    case GradMapVariant::kStd: return "std";
    case GradMapVariant::kLh: return "lh";
    default: return "lhnor";
  }
}
std::string to_string(QShrink q) {
  switch (q) {
    case QShrink::kNone: return "none";
    case QShrink::kInvSqrtL: return "inv_sqrt_l";
    case QShrink::kInvL: return "inv_l";
    default: return "inv_l2";
  }
}

Activation activation_from_string(const std::string& s) {
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "softplus") return Activation::kSoftplus;
  throw UsageError("unknown activation: " + s);
}
GradMapVariant gradmap_from_string(const std::string& s) {
  if (s == "std") return GradMapVariant::kStd;
  if (s == "lh") return GradMapVariant::kLh;
  if (s == "lhnor") return GradMapVariant::kLhNoR;
  throw UsageError("unknown gradient-map variant: " + s);
}
QShrink q_shrink_from_string(const std::string& s) {
  if (s == "none") return QShrink::kNone;
  if (s == "inv_sqrt_l") return QShrink::kInvSqrtL;
  if (s == "inv_l") return QShrink::kInvL;
  if (s == "inv_l2") return QShrink::kInvL2;
  throw UsageError("unknown q-shrink setting: " + s);
}

double q_shrink_divisor(QShrink q, double smoothness) {
  switch (q) {
    case QShrink::kNone: return 1.0;
    case QShrink::kInvSqrtL: return std::sqrt(smoothness);
    case QShrink::kInvL: return smoothness;
    default: return smoothness * smoothness;
  }
}

WeightLayout WeightLayout::make(const L2OArch& arch) {
  const std::size_t in = arch.input_size;
  const std::size_t hid = arch.hidden_size;
  WeightLayout lay{};
  std::size_t off = 0;
  auto take = [&](std::size_t count) {
    const std::size_t at = off;
    off += count;
    return at;
  };
  lay.lstm1_wi = take(4 * hid * in);
  lay.lstm1_wh = take(4 * hid * hid);
  lay.lstm1_b = take(4 * hid);
  lay.lstm2_wi = take(4 * hid * hid);
  lay.lstm2_wh = take(4 * hid * hid);
  lay.lstm2_b = take(4 * hid);
  lay.inner_w = take(hid * hid);
  lay.inner_b = take(hid);
  lay.head_r_w = take(hid);
  lay.head_r_b = take(1);
  lay.head_q_w = take(hid);
  lay.head_q_b = take(1);
  lay.head_b_w = take(hid);
  lay.head_b_b = take(1);
  lay.total = off;
  return lay;
}

std::vector<std::pair<std::string, std::size_t>> WeightLayout::named_sizes(
    const L2OArch& arch) const {
  const std::size_t in = arch.input_size;
  const std::size_t hid = arch.hidden_size;
  return {
      {"lstm1_wi", 4 * hid * in}, {"lstm1_wh", 4 * hid * hid}, {"lstm1_b", 4 * hid},
      {"lstm2_wi", 4 * hid * hid}, {"lstm2_wh", 4 * hid * hid}, {"lstm2_b", 4 * hid},
      {"inner_w", hid * hid},     {"inner_b", hid},
      {"head_r_w", hid},          {"head_r_b", 1},
      {"head_q_w", hid},          {"head_q_b", 1},
      {"head_b_w", hid},          {"head_b_b", 1},
  };
}

L2OParameterBundle L2OParameterBundle::init(const L2OArch& arch, std::uint64_t seed) {
  L2OParameterBundle bundle;
  bundle.arch = arch;
  const WeightLayout lay = WeightLayout::make(arch);
  bundle.weights.assign(lay.total, 0.0);
  Rng rng(seed);
  const std::size_t in = arch.input_size;
  const std::size_t hid = arch.hidden_size;
  auto fill = [&](std::size_t off, std::size_t count, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) {
      bundle.weights[off + i] = rng.uniform(-bound, bound);
    }
  };
  fill(lay.lstm1_wi, 4 * hid * in, in);
  fill(lay.lstm1_wh, 4 * hid * hid, hid);
  fill(lay.lstm1_b, 4 * hid, hid);
  fill(lay.lstm2_wi, 4 * hid * hid, hid);
  fill(lay.lstm2_wh, 4 * hid * hid, hid);
  fill(lay.lstm2_b, 4 * hid, hid);
  fill(lay.inner_w, hid * hid, hid);
  fill(lay.inner_b, hid, hid);
  fill(lay.head_r_w, hid, hid);
  fill(lay.head_r_b, 1, hid);
  fill(lay.head_q_w, hid, hid);
  fill(lay.head_q_b, 1, hid);
  fill(lay.head_b_w, hid, hid);
  fill(lay.head_b_b, 1, hid);
  return bundle;
}

void L2OParameterBundle::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open checkpoint for writing: " + path);
  const WeightLayout lay = layout();
  out << "gom-l2o-checkpoint v1\n";
  out << "input_size=" << arch.input_size << " hidden_size=" << arch.hidden_size
      << " activation=" << to_string(arch.activation)
      << " gradmap=" << to_string(arch.gradmap)
      << " q_shrink=" << to_string(arch.q_shrink)
      << " scale_r=" << format_double(arch.scale_r)
      << " scale_q=" << format_double(arch.scale_q)
      << " scale_b=" << format_double(arch.scale_b)
      << " scale_r_by_l=" << (arch.scale_r_by_l ? 1 : 0) << "\n";
  out << "arrays";
  for (const auto& [name, count] : lay.named_sizes(arch)) {
    out << " " << name << "=" << count;
  }
  out << "\n";
  out << "data\n";
  for (double v : weights) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFF);
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
  if (!out) throw UsageError("failed writing checkpoint: " + path);
}

namespace {

std::map<std::string, std::string> parse_kv_line(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw UsageError("checkpoint: bad token '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

}  // namespace

L2OParameterBundle L2OParameterBundle::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "gom-l2o-checkpoint v1") {
    throw UsageError("checkpoint: bad magic in " + path);
  }
  if (!std::getline(in, line)) throw UsageError("checkpoint: missing header");
  const auto kv = parse_kv_line(line);
  L2OArch arch;
  try {
    arch.input_size = std::stoull(kv.at("input_size"));
    arch.hidden_size = std::stoull(kv.at("hidden_size"));
    arch.activation = activation_from_string(kv.at("activation"));
    arch.gradmap = gradmap_from_string(kv.at("gradmap"));
    arch.q_shrink = q_shrink_from_string(kv.at("q_shrink"));
    arch.scale_r = std::stod(kv.at("scale_r"));
    arch.scale_q = std::stod(kv.at("scale_q"));
    arch.scale_b = std::stod(kv.at("scale_b"));
    arch.scale_r_by_l = kv.at("scale_r_by_l") == "1";
  } catch (const std::out_of_range&) {
    throw UsageError("checkpoint: missing header field");
  }
  if (!std::getline(in, line) || line.rfind("arrays", 0) != 0) {
    throw UsageError("checkpoint: missing arrays line");
  }
  const WeightLayout lay = WeightLayout::make(arch);
  {
    const auto declared = parse_kv_line(line.substr(6));
    for (const auto& [name, count] : lay.named_sizes(arch)) {
      auto it = declared.find(name);
      if (it == declared.end() || std::stoull(it->second) != count) {
        throw UsageError("checkpoint: array count mismatch for " + name);
      }
    }
    if (declared.size() != lay.named_sizes(arch).size()) {
      throw UsageError("checkpoint: unexpected array entries");
    }
  }
  if (!std::getline(in, line) || line != "data") throw UsageError("checkpoint: missing data marker");
  L2OParameterBundle bundle;
  bundle.arch = arch;
  bundle.weights.resize(lay.total);
  std::vector<unsigned char> raw(lay.total * 8);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw UsageError("checkpoint: truncated weight data");
  }
  char extra;
  if (in.read(&extra, 1)) throw UsageError("checkpoint: trailing bytes after weights");
  for (std::size_t i = 0; i < lay.total; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(raw[i * 8 + b]) << (8 * b);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    bundle.weights[i] = v;
  }
  for (double v : bundle.weights) {
    if (!std::isfinite(v)) throw NumericError("checkpoint: non-finite weight");
  }
  return bundle;
}

std::vector<double> build_features(const ProblemInstance& p, const Vec& x,
                                   const L2OState& state) {
  if (x.size() != p.dim()) throw UsageError("build_features: dimension mismatch");
  const Vec g = smooth_gradient(p, x);
  const SubgradientBounds sb = subgradient_bounds(p, x);
  std::vector<double> feats(3 * p.dim());
  for (std::size_t i = 0; i < p.dim(); ++i) {
    feats[3 * i + 0] = g[i] / state.norms0[0];
    feats[3 * i + 1] = sb.lb[i] / state.norms0[1];
    feats[3 * i + 2] = sb.ub[i] / state.norms0[2];
  }
  return feats;
}

EmittedParams emit_parameters(const L2OParameterBundle& bundle,
                              const std::vector<double>& features, L2OState& state,
                              double smoothness) {
  const std::size_t n = features.size() / 3;
  if (features.size() != 3 * n) throw UsageError("emit_parameters: features must be n x 3");
  const L2OArch& arch = bundle.arch;
  const std::size_t hid = arch.hidden_size;
  if (state.h1.size() != n * hid) throw UsageError("emit_parameters: state size mismatch");
  const WeightLayout lay = bundle.layout();
  const double r_mult = arch.scale_r / (arch.scale_r_by_l ? smoothness : 1.0);
  const double q_mult = arch.scale_q / q_shrink_divisor(arch.q_shrink, smoothness);

  EmittedParams out;
  out.r_diag.resize(n);
  out.q_diag.resize(n);
  out.b_diag.resize(n);
  std::vector<double> h_new(hid), c_new(hid), inner(hid);
  const std::span<const double> w(bundle.weights);
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, 3> feat{features[3 * i], features[3 * i + 1], features[3 * i + 2]};
    double r, q, b;
    detail::emit_for_coordinate<double>(
        arch, lay, w, std::span<const double>(feat),
        std::span<double>(&state.h1[i * hid], hid), std::span<double>(&state.c1[i * hid], hid),
        std::span<double>(&state.h2[i * hid], hid), std::span<double>(&state.c2[i * hid], hid),
        h_new, c_new, inner, r_mult, q_mult, arch.scale_b, &r, &q, &b);
    if (!std::isfinite(r) || !std::isfinite(q) || !std::isfinite(b)) {
      throw NumericError("emit_parameters: non-finite activation");
    }
    out.r_diag[i] = r;
    out.q_diag[i] = q;
    out.b_diag[i] = b;
  }
  return out;
}

Vec l2o_step(const ProblemInstance& p, const L2OParameterBundle& bundle, L2OState& state) {
  L2ORun<double> run = L2ORun<double>::bind(bundle, p, nullptr);
  // Move the caller's state in, step once, move back.
  L2ORollState<double> st;
  st.x = state.x;
  st.v = state.v;
  st.g_prev = state.g_prev;
  st.h1 = state.h1;
  st.c1 = state.c1;
  st.h2 = state.h2;
  st.c2 = state.c2;
  st.norms0 = state.norms0;
  l2o_step_core<double>(run, st);
  state = st;
  return state.x;
}

ParametricStepResult l2o_parametric_step(const ProblemInstance& p, const Vec& x_prev,
                                         const Vec& v, const Vec& g_prev, const Vec& r_diag,
                                         const Vec& q_diag, const Vec& b_diag,
                                         GradMapVariant variant) {
  const std::size_t n = p.dim();
  if (x_prev.size() != n || v.size() != n || g_prev.size() != n || r_diag.size() != n ||
      q_diag.size() != n || b_diag.size() != n) {
    throw UsageError("l2o_parametric_step: dimension mismatch");
  }
  const Vec grad = smooth_gradient(p, x_prev);
  ParametricStepResult out;
  out.x_next.resize(n);
  out.v_next.resize(n);
  out.g_map.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const detail::CoordStep<double> cs = detail::prox_update_coord<double>(
        p.lambda, p.translation(i), variant, x_prev[i], grad[i], v[i], g_prev[i], r_diag[i],
        q_diag[i], b_diag[i]);
    out.x_next[i] = cs.x_next;
    out.v_next[i] = cs.v_next;
    out.g_map[i] = cs.g_map;
  }
  return out;
}

namespace {

SolverTrajectory roll_l2o(const ProblemInstance& p, const Vec& x0, std::size_t k_steps,
                          const L2OParameterBundle& bundle, bool saturate,
                          std::optional<std::size_t>* diverged_at) {
  const auto t_start = std::chrono::steady_clock::now();
  SolverTrajectory traj;
  traj.solver_name = "l2o";
  traj.config = "gradmap=" + to_string(bundle.arch.gradmap) +
                ",q_shrink=" + to_string(bundle.arch.q_shrink);
  L2ORun<double> run = L2ORun<double>::bind(bundle, p, nullptr);
  L2ORollState<double> st = l2o_init_state(run, x0);
  traj.iterates.push_back(x0);
  traj.objectives.push_back(objective(p, x0));
  traj.grad_norms.push_back(norm2(smooth_gradient(p, x0)));
  bool dead = false;
  for (std::size_t k = 1; k <= k_steps; ++k) {
    if (!dead) {
      bool finite = true;
      if (saturate) {
        // Treat any step-level numeric failure (R underflowing to zero,
        // division blow-ups) like a non-finite iterate.
        try {
          l2o_step_core<double>(run, st);
        } catch (const NumericError&) {
          finite = false;
        } catch (const std::domain_error&) {
          finite = false;
        }
      } else {
        l2o_step_core<double>(run, st);
      }
      if (finite) {
        for (double v : st.x) {
          if (!std::isfinite(v)) {
            finite = false;
            break;
          }
        }
      }
      if (!finite) {
        if (!saturate) {
          throw NumericError("run_l2o: non-finite iterate at step " + std::to_string(k));
        }
        if (diverged_at) *diverged_at = k;
        dead = true;
      }
    }
    if (dead) {
      traj.iterates.push_back(traj.iterates.back());
      traj.objectives.push_back(std::numeric_limits<double>::infinity());
      traj.grad_norms.push_back(std::numeric_limits<double>::infinity());
    } else {
      traj.iterates.push_back(st.x);
      traj.objectives.push_back(objective(p, st.x));
      traj.grad_norms.push_back(norm2(smooth_gradient(p, st.x)));
    }
  }
  traj.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                     std::chrono::steady_clock::now() - t_start)
                     .count();
  return traj;
}

}  // namespace

SolverTrajectory run_l2o(const ProblemInstance& p, const Vec& x0, std::size_t k_steps,
                         const L2OParameterBundle& bundle) {
  return roll_l2o(p, x0, k_steps, bundle, /*saturate=*/false, nullptr);
}

L2ORolloutResult run_l2o_saturating(const ProblemInstance& p, const Vec& x0,
                                    std::size_t k_steps, const L2OParameterBundle& bundle) {
  L2ORolloutResult res;
  res.trajectory = roll_l2o(p, x0, k_steps, bundle, /*saturate=*/true, &res.diverged_at);
  return res;
}

}  // namespace goml2o
