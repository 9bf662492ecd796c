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

#include "goml2o/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "goml2o/common.hpp"
#include "goml2o/rng.hpp"
#include "goml2o/solvers.hpp"

namespace goml2o {

namespace {

constexpr double kExactTol = 1e-12;
constexpr double kIneqTol = 1e-9;

Vec concat(const Vec& a, const Vec& b) {
  Vec out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Quadratic instance with lambda = 0 and the design matrix normalized so the
// smoothness constant is ~1; keeps the Assumption-1 step 1/(2L) well inside
// (0, 1) so witness perturbations stay contractive.
ProblemInstance make_normalized_quadratic(std::size_t n, std::size_t m, std::uint64_t seed) {
  Rng rng(seed);
  Mat a(m, n);
  for (double& v : a.data) v = rng.normal();
  const double top = compute_smoothness(ProblemKind::kLasso, a);
  const double inv_sigma = 1.0 / std::sqrt(top);
  for (double& v : a.data) v *= inv_sigma;
  Vec b = rng.normal_vector(m);
  ProblemInstance p = ProblemInstance::make(ProblemKind::kLasso, std::move(a), std::move(b),
                                            0.0, {}, seed);
  return p;
}

// Strictly convex quadratic (tall design matrix), lambda = 0.
ProblemInstance make_strict_quadratic(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t m = n + 5;
  Mat a(m, n);
  for (double& v : a.data) v = rng.normal();
  Vec b = rng.normal_vector(m);
  return ProblemInstance::make(ProblemKind::kLasso, std::move(a), std::move(b), 0.0, {}, seed);
}

Vec quadratic_minimizer(const ProblemInstance& p) {
  const std::size_t n = p.dim();
  Mat gram(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < p.num_rows(); ++r) s += p.a.at(r, i) * p.a.at(r, j);
      gram.at(i, j) = s;
    }
  }
  return cholesky_solve(gram, matvec_t(p.a, p.b));
}

}  // namespace

double WitnessNet::c_bound() const {
  return epsilon * norm2(direction) * std::sqrt(static_cast<double>(n_out()));
}

Vec WitnessNet::eval(const Vec& z) const {
  if (z.size() != anchor.size()) throw UsageError("WitnessNet: input dimension mismatch");
  double u = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) u += direction[i] * (z[i] - anchor[i]);
  const double bump = epsilon * std::tanh(u);
  Vec out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) out[i] = base[i] + bump;
  return out;
}

void WitnessNet::rebase(Vec new_anchor, Vec new_base) {
  anchor = std::move(new_anchor);
  base = std::move(new_base);
}

double fd_jacobian_frobenius(const std::function<Vec(const Vec&)>& f, const Vec& z,
                             std::size_t n_out, double h) {
  double sum_sq = 0.0;
  Vec zp = z, zm = z;
  for (std::size_t j = 0; j < z.size(); ++j) {
    zp[j] = z[j] + h;
    zm[j] = z[j] - h;
    const Vec fp = f(zp);
    const Vec fm = f(zm);
    if (fp.size() != n_out || fm.size() != n_out) {
      throw UsageError("fd_jacobian_frobenius: output size mismatch");
    }
    for (std::size_t i = 0; i < n_out; ++i) {
      const double d = (fp[i] - fm[i]) / (2.0 * h);
      sum_sq += d * d;
    }
    zp[j] = z[j];
    zm[j] = z[j];
  }
  return std::sqrt(sum_sq);
}

void TheoryReport::absorb(double margin) {
  if (trials == 0) {
    worst_margin = margin;
  } else {
    worst_margin = std::min(worst_margin, margin);
  }
  ++trials;
  if (margin < -tolerance) ++violations;
}

std::string TheoryReport::csv_row() const {
  std::ostringstream os;
  os << check_name << "," << trials << "," << violations << ","
     << format_double(trials == 0 ? 0.0 : worst_margin) << "," << format_double(tolerance);
  return os.str();
}

TheoryReport check_mvt_residual(const std::function<Vec(const Vec&)>& net, double c,
                                std::size_t n_out,
                                const std::vector<std::pair<Vec, Vec>>& pairs) {
  TheoryReport rep;
  rep.check_name = "mvt_residual";
  rep.tolerance = kIneqTol;
  const double c_sqrt_n = c * std::sqrt(static_cast<double>(n_out));
  for (const auto& [z, zp] : pairs) {
    const Vec dz = net(zp);
    const Vec d0 = net(z);
    const double lhs = norm2_diff(dz, d0);
    const double rhs = c_sqrt_n * norm2_diff(zp, z);
    rep.absorb(rhs - lhs);
  }
  return rep;
}

TheoryReport check_mvt_residual_randomized(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t dim = 10;
  const std::size_t n_out = 5;
  WitnessNet w;
  w.anchor = rng.normal_vector(dim);
  w.base = rng.normal_vector(n_out);
  w.direction = rng.unit_vector(dim);
  w.epsilon = 0.1;
  std::vector<std::pair<Vec, Vec>> pairs;
  pairs.reserve(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    Vec z(dim), zp(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      z[j] = rng.uniform(-3.0, 3.0);
      zp[j] = rng.uniform(-3.0, 3.0);
    }
    pairs.emplace_back(std::move(z), std::move(zp));
  }
  auto f = [&w](const Vec& z) { return w.eval(z); };
  return check_mvt_residual(f, w.c_bound(), n_out, pairs);
}

TheoryReport check_lemma1(const ProblemInstance& p, std::size_t trials, std::uint64_t seed) {
  if (p.lambda != 0.0) throw UsageError("check_lemma1: requires a smooth instance (lambda = 0)");
  TheoryReport rep;
  rep.check_name = "lemma1_descent";
  rep.tolerance = kExactTol;
  Rng rng(seed);
  const std::size_t n = p.dim();
  const double l_const = p.smoothness;
  std::size_t done = 0;
  while (done < trials) {
    Vec x(n);
    for (double& v : x) v = 2.0 * rng.normal();
    const Vec g = smooth_gradient(p, x);
    const double gn = norm2(g);
    if (gn == 0.0) continue;  // stationary point: trial skipped

    const double lam = rng.uniform01() / l_const;
    const double theta = rng.uniform01() * 1.5707963267948966;
    const double mag = rng.uniform01() * gn * std::cos(theta) / l_const;

    Vec u = scaled(g, 1.0 / gn);
    Vec w = rng.normal_vector(n);
    const double proj = dot(w, u);
    axpy(-proj, u, w);
    const double wn = norm2(w);
    Vec n2(n, 0.0);
    if (wn > 1e-12) {
      for (std::size_t i = 0; i < n; ++i) {
        n2[i] = mag * (std::cos(theta) * u[i] + std::sin(theta) * w[i] / wn);
      }
    } else {
      // No orthogonal direction available: stay on the gradient ray, which
      // remains inside the admissible cone.
      for (std::size_t i = 0; i < n; ++i) n2[i] = mag * std::cos(theta) * u[i];
    }

    Vec x_next(n);
    for (std::size_t i = 0; i < n; ++i) x_next[i] = x[i] - lam * g[i] - n2[i];
    const double drop = objective(p, x) - objective(p, x_next);
    rep.absorb(drop);
    ++done;
  }
  return rep;
}

TheoryReport check_lemma1_randomized(std::size_t trials, std::uint64_t seed) {
  TheoryReport rep;
  rep.check_name = "lemma1_descent";
  rep.tolerance = kExactTol;
  if (trials == 0) return rep;
  const std::size_t instances = 10;
  const std::size_t per = (trials + instances - 1) / instances;
  std::size_t left = trials;
  for (std::size_t i = 0; i < instances && left > 0; ++i) {
    ProblemInstance p = make_normalized_quadratic(8, 12, Rng::derive_seed(seed, 1000 + i));
    const std::size_t batch = std::min(per, left);
    TheoryReport sub = check_lemma1(p, batch, Rng::derive_seed(seed, 2000 + i));
    rep.violations += sub.violations;
    rep.worst_margin =
        rep.trials == 0 ? sub.worst_margin : std::min(rep.worst_margin, sub.worst_margin);
    rep.trials += sub.trials;
    left -= batch;
  }
  return rep;
}

RateCheckResult corollary1_rate_case(const ProblemInstance& p, const Vec& x0,
                                     std::size_t k_steps) {
  if (p.lambda != 0.0) throw UsageError("corollary1_rate_case: requires lambda = 0");
  const double l_const = p.smoothness;
  Vec x = x0;
  for (std::size_t k = 0; k < k_steps; ++k) {
    const Vec g = smooth_gradient(p, x);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= g[i] / l_const;
  }
  const Vec x_star = quadratic_minimizer(p);
  const double f_star = objective(p, x_star);
  RateCheckResult res;
  res.lhs = objective(p, x) - f_star;
  res.rhs = l_const / (2.0 * static_cast<double>(k_steps)) * dot(sub(x0, x_star), sub(x0, x_star));
  res.margin = (res.rhs - res.lhs) / std::max(1.0, std::abs(res.rhs));
  return res;
}

TheoryReport check_corollary1_rate(std::size_t instances, std::size_t k_steps,
                                   std::uint64_t seed) {
  TheoryReport rep;
  rep.check_name = "corollary1_rate";
  rep.tolerance = kIneqTol;
  for (std::size_t i = 0; i < instances; ++i) {
    ProblemInstance p = make_strict_quadratic(20, Rng::derive_seed(seed, 3000 + i));
    Rng rng = Rng::derive(seed, 4000 + i);
    const Vec x0 = rng.normal_vector(p.dim());
    rep.absorb(corollary1_rate_case(p, x0, k_steps).margin);
  }
  return rep;
}

OodScenario make_ood_scenario(std::size_t n, std::size_t m, std::size_t horizon,
                              double eps1, double eps2, double t_value, double s0_scale,
                              std::uint64_t seed) {
  OodScenario sc;
  sc.p_ind = make_normalized_quadratic(n, m, Rng::derive_seed(seed, 1));
  const double per_coord = t_value / std::sqrt(static_cast<double>(n));
  sc.p_ood = sc.p_ind.with_translation(Vec(n, per_coord));
  Rng rng = Rng::derive(seed, 2);
  sc.x0 = rng.normal_vector(n);
  sc.s0 = scaled(rng.normal_vector(n), s0_scale);
  sc.dir1 = rng.unit_vector(2 * n);
  sc.dir2 = rng.unit_vector(2 * n);
  sc.eps1 = eps1;
  sc.eps2 = eps2;
  sc.horizon = horizon;
  return sc;
}

OodRoll roll_ood_scenario(const OodScenario& sc) {
  const ProblemInstance& p = sc.p_ind;
  const ProblemInstance& po = sc.p_ood;
  const std::size_t n = p.dim();
  const double l_const = p.smoothness;
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  OodRoll roll;
  roll.c1 = sc.eps1 * norm2(sc.dir1) * sqrt_n;
  roll.c2 = sc.eps2 * norm2(sc.dir2) * sqrt_n;

  Vec x = sc.x0;
  Vec s = sc.s0;
  roll.x.push_back(x);
  roll.ood.push_back(add(x, s));
  roll.vt.s.push_back(s);
  roll.vt.horizon = sc.horizon;

  for (std::size_t k = 1; k <= sc.horizon; ++k) {
    const Vec xp = add(x, s);
    const Vec gi = smooth_gradient(p, x);
    const Vec go = smooth_gradient(po, xp);
    const Vec sp = concat(s, sub(go, gi));

    // Witness evaluations at z' = z + s'. Anchored per step at the InD
    // feature, the anchor values are exactly the Assumption-1 outputs
    // (tanh(0) = 0), and the OOD offsets below are exactly J s'.
    const double bump1 = sc.eps1 * std::tanh(dot(sc.dir1, sp));
    const double bump2 = sc.eps2 * std::tanh(dot(sc.dir2, sp));
    const double n1 = 1.0 / (2.0 * l_const) + bump1;

    Vec upd_ood(n), upd_ind(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double n2 = gi[i] / (2.0 * l_const) + bump2;
      upd_ood[i] = n1 * go[i] + n2;
      upd_ind[i] = gi[i] / l_const;
    }
    Vec x_next(n), s_next(n);
    for (std::size_t i = 0; i < n; ++i) {
      x_next[i] = x[i] - upd_ind[i];
      s_next[i] = s[i] - (upd_ood[i] - upd_ind[i]);
    }

    roll.g_ind.push_back(gi);
    roll.g_ood.push_back(go);
    roll.vt.s_prime.push_back(sp);
    x = std::move(x_next);
    s = std::move(s_next);
    roll.x.push_back(x);
    roll.ood.push_back(add(x, s));
    roll.vt.s.push_back(s);
  }

  roll.x_star = quadratic_minimizer(p);
  roll.s_star = sc.p_ood.translation_t.empty()
                    ? Vec(n, 0.0)
                    : scaled(sc.p_ood.translation_t, -1.0);
  roll.f_opt = objective(po, add(roll.x_star, roll.s_star));
  return roll;
}

TheoryReport check_theorem1_gain(const OodScenario& sc) {
  TheoryReport rep;
  rep.check_name = "theorem1_gain";
  rep.tolerance = kIneqTol;
  const OodRoll roll = roll_ood_scenario(sc);
  const double l_const = sc.p_ind.smoothness;
  const double n = static_cast<double>(sc.p_ind.dim());
  for (std::size_t k = 1; k <= sc.horizon; ++k) {
    const double f_next = objective(sc.p_ood, roll.ood[k]);
    const double f_prev = objective(sc.p_ood, roll.ood[k - 1]);
    const double lhs = f_next - f_prev;
    const double go_sq = dot(roll.g_ood[k - 1], roll.g_ood[k - 1]);
    const double gd_sq =
        dot(sub(roll.g_ood[k - 1], roll.g_ind[k - 1]), sub(roll.g_ood[k - 1], roll.g_ind[k - 1]));
    const double sp_sq = dot(roll.vt.s_prime[k - 1], roll.vt.s_prime[k - 1]);
    const double rhs = -go_sq / (2.0 * l_const) + gd_sq / (2.0 * l_const) +
                       (l_const * roll.c1 * roll.c1 * n * go_sq +
                        2.0 * l_const * roll.c2 * roll.c2 * n) *
                           sp_sq;
    rep.absorb(rhs - lhs);
  }
  return rep;
}

TheoryReport check_theorem1_gain_randomized(std::size_t scenarios, std::uint64_t seed) {
  TheoryReport rep;
  rep.check_name = "theorem1_gain";
  rep.tolerance = kIneqTol;
  for (std::size_t i = 0; i < scenarios; ++i) {
    Rng rng = Rng::derive(seed, 5000 + i);
    const double t_value = rng.uniform(-2.0, 2.0);
    const double s0_scale = rng.uniform(0.0, 0.8);
    const OodScenario sc =
        make_ood_scenario(5, 7, 20, 0.05, 0.05, t_value, s0_scale, Rng::derive_seed(seed, i));
    const TheoryReport sub = check_theorem1_gain(sc);
    rep.violations += sub.violations;
    rep.worst_margin =
        rep.trials == 0 ? sub.worst_margin : std::min(rep.worst_margin, sub.worst_margin);
    rep.trials += sub.trials;
  }
  return rep;
}

TheoryReport check_theorem2_rate(const OodScenario& sc) {
  TheoryReport rep;
  rep.check_name = "theorem2_rate";
  rep.tolerance = kIneqTol;
  const OodRoll roll = roll_ood_scenario(sc);
  const ProblemInstance& po = sc.p_ood;
  const double l_const = sc.p_ind.smoothness;
  const std::size_t k_total = sc.horizon;
  const double sqrt_n = std::sqrt(static_cast<double>(sc.p_ind.dim()));

  const Vec opt = add(roll.x_star, roll.s_star);
  double lhs = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= k_total; ++k) {
    lhs = std::min(lhs, objective(po, roll.ood[k]) - roll.f_opt);
  }

  const double head = 0.5 * l_const * dot(sub(roll.ood[0], opt), sub(roll.ood[0], opt)) -
                      0.5 * l_const * dot(sub(roll.ood[k_total], opt), sub(roll.ood[k_total], opt));

  double th2_sum = 0.0;
  double cor3_grad_sum = 0.0;
  double cor3_c_sum = 0.0;
  for (std::size_t k = 1; k <= k_total; ++k) {
    const Vec to_opt = sub(roll.ood[k], opt);
    Vec gd_point(roll.ood[k - 1].size());
    for (std::size_t i = 0; i < gd_point.size(); ++i) {
      gd_point[i] = roll.ood[k - 1][i] - roll.g_ood[k - 1][i] / l_const;
    }
    th2_sum += dot(to_opt, sub(roll.ood[k], gd_point));
    cor3_grad_sum += dot(sub(roll.g_ood[k - 1], roll.g_ind[k - 1]), to_opt);
    const double sp_norm = norm2(roll.vt.s_prime[k - 1]);
    cor3_c_sum += (roll.c1 * sqrt_n * norm2(roll.g_ood[k - 1]) +
                   roll.c2 * sqrt_n * norm2(to_opt)) *
                  sp_norm;
  }
  const double inv_k = 1.0 / static_cast<double>(k_total);
  const double th2_rhs = head + l_const * inv_k * th2_sum;
  const double cor3_rhs = head + 0.5 * inv_k * cor3_grad_sum + l_const * inv_k * cor3_c_sum;

  rep.absorb(th2_rhs - lhs);
  rep.absorb(cor3_rhs - lhs);
  return rep;
}

TheoryReport check_theorem2_rate_randomized(std::size_t scenarios, std::uint64_t seed) {
  TheoryReport rep;
  rep.check_name = "theorem2_rate";
  rep.tolerance = kIneqTol;
  for (std::size_t i = 0; i < scenarios; ++i) {
    Rng rng = Rng::derive(seed, 6000 + i);
    const double t_value = rng.uniform(-2.0, 2.0);
    const double s0_scale = rng.uniform(0.0, 0.8);
    const OodScenario sc =
        make_ood_scenario(5, 7, 20, 0.05, 0.05, t_value, s0_scale, Rng::derive_seed(seed, 40000 + i));
    const TheoryReport sub = check_theorem2_rate(sc);
    rep.violations += sub.violations;
    rep.worst_margin =
        rep.trials == 0 ? sub.worst_margin : std::min(rep.worst_margin, sub.worst_margin);
    rep.trials += sub.trials;
  }
  return rep;
}

TheoryReport check_composite_lemma(const ProblemInstance& p, std::size_t trials,
                                   std::uint64_t seed) {
  if (p.lambda <= 0.0) throw UsageError("check_composite_lemma: requires lambda > 0");
  TheoryReport rep;
  rep.check_name = "composite_lemma";
  rep.tolerance = kIneqTol;
  Rng rng(seed);
  const std::size_t n = p.dim();
  const double l_const = p.smoothness;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Vec x_prev(n);
    for (double& v : x_prev) v = 1.5 * rng.normal();
    Vec n1(n);
    for (double& v : n1) v = std::max(rng.uniform01(), 1e-6) * 2.0 / l_const;
    Vec n2(n);
    for (double& v : n2) v = rng.normal() / l_const;

    const Vec g = smooth_gradient(p, x_prev);
    Vec xbar(n), thresholds(n);
    for (std::size_t i = 0; i < n; ++i) {
      xbar[i] = x_prev[i] - n1[i] * g[i] - n2[i];
      thresholds[i] = p.lambda * n1[i];
    }
    const Vec x_k = prox_l1(xbar, thresholds, p.translation_t);
    Vec g_map(n);
    for (std::size_t i = 0; i < n; ++i) g_map[i] = (x_prev[i] - x_k[i] - n2[i]) / n1[i];

    // Lemma RHS slack for a random probe point and for probe = x_prev.
    const double f_xk = objective(p, x_k);
    auto lemma_rhs = [&](const Vec& probe) {
      double quad = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = n1[i] * g_map[i] + n2[i] - g_map[i] / l_const;
        quad += d * d;
      }
      double gsq = dot(g_map, g_map);
      return objective(p, probe) + dot(g_map, sub(x_prev, probe)) +
             0.5 * l_const * (quad - gsq / (l_const * l_const));
    };
    Vec probe(n);
    for (double& v : probe) v = 2.0 * rng.normal();
    rep.absorb(lemma_rhs(probe) - f_xk);
    rep.absorb(lemma_rhs(x_prev) - f_xk);
  }
  return rep;
}

TheoryReport check_composite_lemma_randomized(std::size_t trials, std::uint64_t seed) {
  TheoryReport rep;
  rep.check_name = "composite_lemma";
  rep.tolerance = kIneqTol;
  if (trials == 0) return rep;
  const std::size_t instances = 5;
  const std::size_t per = (trials + instances - 1) / instances;
  std::size_t left = trials;
  for (std::size_t i = 0; i < instances && left > 0; ++i) {
    ProblemInstance p = generate_instance(ProblemKind::kLasso, 10, 8,
                                          Rng::derive_seed(seed, 7000 + i));
    const std::size_t batch = std::min(per, left);
    TheoryReport sub = check_composite_lemma(p, batch, Rng::derive_seed(seed, 8000 + i));
    rep.violations += sub.violations;
    rep.worst_margin =
        rep.trials == 0 ? sub.worst_margin : std::min(rep.worst_margin, sub.worst_margin);
    rep.trials += sub.trials;
    left -= batch;
  }

  // Composite prox-gradient with N1 = 1/L, N2 = 0 meets the (L/2K)||x0-x*||^2
  // rate; reference optimum from a long FISTA run.
  for (std::size_t i = 0; i < instances; ++i) {
    ProblemInstance p = generate_instance(ProblemKind::kLasso, 10, 8,
                                          Rng::derive_seed(seed, 7000 + i));
    Rng rng = Rng::derive(seed, 9000 + i);
    const Vec x0 = rng.normal_vector(p.dim());
    const std::size_t k_steps = 50;
    const SolverTrajectory traj = run_ista(p, x0, k_steps);
    const SolverTrajectory ref = run_fista(p, Vec(p.dim(), 0.0), 20000);
    const double f_star = ref.objectives.back();
    const Vec& x_star = ref.iterates.back();
    const double lhs = traj.objectives.back() - f_star;
    const double rhs = p.smoothness / (2.0 * static_cast<double>(k_steps)) *
                       dot(sub(x0, x_star), sub(x0, x_star));
    rep.absorb((rhs - lhs) / std::max(1.0, std::abs(rhs)));
  }
  return rep;
}

HistoryBounds compare_history_bounds(const HistoryBoundTerms& t) {
  const double n2 = static_cast<double>(t.n) * static_cast<double>(t.n);
  const double n4 = n2 * n2;
  const double l = t.smoothness;
  const double l2 = l * l;
  const double l4 = l2 * l2;
  const double grad_sq = t.grad_norm * t.grad_norm;
  const double gdiff_sq = t.subgrad_diff_norm * t.subgrad_diff_norm;
  const double s_sq = t.s1_norm * t.s1_norm + t.s2_norm * t.s2_norm;
  const double xdiff_sq = t.x_diff_norm * t.x_diff_norm;
  const double s1pt_sq = t.s1_plus_t_norm * t.s1_plus_t_norm;
  const double common = -grad_sq / (2.0 * l);

  auto first_factor = [&](double c4_sq, double l_boost) {
    return l * n2 * t.c1 * t.c1 * grad_sq + l * n2 * t.c2 * t.c2 +
           l * n4 * t.c3 * t.c3 * c4_sq * l_boost * s_sq * xdiff_sq;
  };
  auto second_factor = [&](double c4_sq, double l_boost, double extra_s1_sq) {
    return extra_s1_sq + l2 * s1pt_sq + gdiff_sq + n2 * c4_sq * l_boost * s_sq * xdiff_sq;
  };

  const double c4g_sq = t.c4_gradient * t.c4_gradient;
  const double c4v_sq = t.c4_variable * t.c4_variable;
  HistoryBounds out;
  out.gradient_bound = common + first_factor(c4g_sq, l4) * second_factor(c4g_sq, l4, 0.0);
  out.variable_bound =
      common + first_factor(c4v_sq, 1.0) * second_factor(c4v_sq, 1.0, t.s1_norm * t.s1_norm);
  return out;
}

TheoryReport check_history_bounds_randomized(std::size_t samples, std::uint64_t seed) {
  TheoryReport rep;
  rep.check_name = "history_bounds";
  rep.tolerance = kExactTol;
  Rng rng(seed);
  for (std::size_t i = 0; i < samples; ++i) {
    HistoryBoundTerms t;
    t.n = 1 + static_cast<std::size_t>(rng.next_below(8));
    t.grad_norm = rng.uniform(0.0, 2.0);
    t.subgrad_diff_norm = rng.uniform(0.0, 2.0);
    t.s1_norm = rng.uniform(0.0, 2.0);
    t.s2_norm = rng.uniform(0.0, 2.0);
    t.s1_plus_t_norm = rng.uniform(0.0, 3.0);
    t.x_diff_norm = rng.uniform(0.0, 2.0);
    t.c1 = rng.uniform(0.0, 1.0);
    t.c2 = rng.uniform(0.0, 1.0);
    t.c3 = rng.uniform(0.0, 1.0);
    t.c4_variable = rng.uniform(0.0, 1.0);
    if (i % 2 == 0) {
      // smooth regime: L <= 1, identical C4
      t.smoothness = std::max(rng.uniform01(), 1e-3);
      t.c4_gradient = t.c4_variable;
    } else {
      // steep regime: L > 1 with C4^g <= C4^v / L^2
      t.smoothness = rng.uniform(1.0, 4.0);
      t.c4_gradient =
          rng.uniform(0.3, 0.999) * t.c4_variable / (t.smoothness * t.smoothness);
    }
    const HistoryBounds hb = compare_history_bounds(t);
    rep.absorb(hb.variable_bound - hb.gradient_bound);
  }
  return rep;
}

std::vector<TheoryReport> run_theory_suite(const TheorySuiteConfig& cfg) {
  std::vector<TheoryReport> reports;
  reports.push_back(check_mvt_residual_randomized(cfg.mvt_trials, Rng::derive_seed(cfg.seed, 11)));
  reports.push_back(check_lemma1_randomized(cfg.lemma1_trials, Rng::derive_seed(cfg.seed, 12)));
  if (cfg.corollary1_instances > 0) {
    reports.push_back(
        check_corollary1_rate(cfg.corollary1_instances, 10, Rng::derive_seed(cfg.seed, 13)));
  } else {
    TheoryReport rep;
    rep.check_name = "corollary1_rate";
    rep.tolerance = kIneqTol;
    reports.push_back(rep);
  }
  reports.push_back(
      check_theorem1_gain_randomized(cfg.theorem1_scenarios, Rng::derive_seed(cfg.seed, 14)));
  reports.push_back(
      check_theorem2_rate_randomized(cfg.theorem2_scenarios, Rng::derive_seed(cfg.seed, 15)));
  reports.push_back(
      check_composite_lemma_randomized(cfg.composite_trials, Rng::derive_seed(cfg.seed, 16)));
  reports.push_back(
      check_history_bounds_randomized(cfg.history_samples, Rng::derive_seed(cfg.seed, 17)));
  return reports;
}

}  // namespace goml2o
