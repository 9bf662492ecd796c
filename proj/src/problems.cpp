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

#include "goml2o/problems.hpp"

#include <cmath>
#include <sstream>

#include "goml2o/common.hpp"
#include "goml2o/numeric.hpp"
#include "goml2o/rng.hpp"
#include "goml2o/solvers.hpp"

namespace goml2o {

std::string to_string(ProblemKind kind) {
  return kind == ProblemKind::kLasso ? "lasso" : "logistic";
}

ProblemKind problem_kind_from_string(const std::string& s) {
  if (s == "lasso") return ProblemKind::kLasso;
  if (s == "logistic") return ProblemKind::kLogistic;
  throw UsageError("unknown problem kind: " + s);
}

bool ProblemInstance::is_translated() const {
  for (double v : translation_t) {
    if (v != 0.0) return true;
  }
  return false;
}

ProblemInstance ProblemInstance::make(ProblemKind kind, Mat a, Vec b, double lambda,
                                      Vec translation_t, std::uint64_t seed) {
  if (a.rows == 0 || a.cols == 0) throw UsageError("problem matrix is empty");
  if (b.size() != a.rows) throw UsageError("problem: |b| != rows(A)");
  if (!translation_t.empty() && translation_t.size() != a.cols) {
    throw UsageError("problem: |t| != cols(A)");
  }
  if (lambda < 0.0) throw UsageError("problem: lambda must be >= 0");
  if (kind == ProblemKind::kLogistic) {
    for (double v : b) {
      if (v != 0.0 && v != 1.0) throw UsageError("logistic labels must be 0 or 1");
    }
  }
  ProblemInstance p;
  p.kind = kind;
  p.a = std::move(a);
  p.b = std::move(b);
  p.lambda = lambda;
  p.translation_t = std::move(translation_t);
  p.seed = seed;
  p.smoothness = compute_smoothness(kind, p.a);
  if (!(p.smoothness > 0.0)) throw NumericError("problem: smoothness constant is not positive");
  return p;
}

ProblemInstance ProblemInstance::with_translation(Vec t) const {
  if (!t.empty() && t.size() != dim()) throw UsageError("with_translation: |t| != n");
  ProblemInstance p = *this;
  p.translation_t = std::move(t);
  return p;
}

double compute_smoothness(ProblemKind kind, const Mat& a) {
  if (a.rows == 0 || a.cols == 0) throw UsageError("compute_smoothness: empty matrix");
  const double row_scale = kind == ProblemKind::kLogistic ? 1.0 / static_cast<double>(a.rows) : 1.0;

  // Power iteration on A^T A (matrix-free), Rayleigh-quotient estimate.
  const std::size_t n = a.cols;
  Vec v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double eig = 0.0;
  const int max_iters = 10000;
  for (int it = 1; it <= max_iters; ++it) {
    Vec w = matvec_t(a, matvec(a, v));
    if (row_scale != 1.0) {
      for (double& x : w) x *= row_scale;
    }
    const double new_eig = dot(v, w);
    const double wn = norm2(w);
    if (wn == 0.0) return 0.0;  // zero matrix
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
    if (std::abs(new_eig - eig) <= 1e-10 * std::max(std::abs(new_eig), 1e-300)) {
      return new_eig;
    }
    eig = new_eig;
  }
  throw NumericError("compute_smoothness: power iteration did not converge in 10000 iterations");
}

namespace {

Vec shifted_point(const ProblemInstance& p, const Vec& x) {
  Vec y = x;
  if (!p.translation_t.empty()) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += p.translation_t[i];
  }
  return y;
}

}  // namespace

Vec smooth_gradient(const ProblemInstance& p, const Vec& x) {
  if (x.size() != p.dim()) throw UsageError("smooth_gradient: dimension mismatch");
  const Vec y = shifted_point(p, x);
  if (p.kind == ProblemKind::kLasso) {
    Vec r = matvec(p.a, y);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= p.b[i];
    return matvec_t(p.a, r);
  }
  const std::size_t m = p.num_rows();
  Vec z = matvec(p.a, y);
  Vec w(m);
  for (std::size_t i = 0; i < m; ++i) w[i] = (stable_sigmoid(z[i]) - p.b[i]) / static_cast<double>(m);
  return matvec_t(p.a, w);
}

double smooth_objective(const ProblemInstance& p, const Vec& x) {
  if (x.size() != p.dim()) throw UsageError("smooth_objective: dimension mismatch");
  const Vec y = shifted_point(p, x);
  if (p.kind == ProblemKind::kLasso) {
    const Vec r = matvec(p.a, y);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double d = r[i] - p.b[i];
      s += d * d;
    }
    return 0.5 * s;
  }
  const std::size_t m = p.num_rows();
  const Vec z = matvec(p.a, y);
  double s = 0.0;
  // -[b log h(z) + (1-b) log(1-h(z))] = b softplus(-z) + (1-b) softplus(z)
  for (std::size_t i = 0; i < m; ++i) {
    s += p.b[i] * stable_softplus(-z[i]) + (1.0 - p.b[i]) * stable_softplus(z[i]);
  }
  return s / static_cast<double>(m);
}

double objective(const ProblemInstance& p, const Vec& x) {
  double s = smooth_objective(p, x);
  if (p.lambda > 0.0) {
    double l1 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) l1 += std::abs(x[i] + p.translation(i));
    s += p.lambda * l1;
  }
  return s;
}

double prox_l1_scalar(double xbar, double threshold, double t) {
  if (threshold < 0.0) throw UsageError("prox_l1: negative threshold");
  // Soft-thresholding in the shifted coordinate u = x + t.
  const double u = xbar + t;
  const double s = sign0(u);
  return s * relu0(s * u - threshold) - t;
}

Vec prox_l1(const Vec& xbar, const Vec& thresholds, const Vec& t) {
  if (thresholds.size() != xbar.size()) throw UsageError("prox_l1: |thresholds| != |xbar|");
  if (!t.empty() && t.size() != xbar.size()) throw UsageError("prox_l1: |t| != |xbar|");
  Vec out(xbar.size());
  for (std::size_t i = 0; i < xbar.size(); ++i) {
    out[i] = prox_l1_scalar(xbar[i], thresholds[i], t.empty() ? 0.0 : t[i]);
  }
  return out;
}

SubgradientBounds subgradient_bounds(const ProblemInstance& p, const Vec& x) {
  if (x.size() != p.dim()) throw UsageError("subgradient_bounds: dimension mismatch");
  SubgradientBounds sb;
  sb.lb.resize(x.size());
  sb.ub.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i] + p.translation(i);
    if (xi > 0.0) {
      sb.lb[i] = sb.ub[i] = p.lambda;
    } else if (xi < 0.0) {
      sb.lb[i] = sb.ub[i] = -p.lambda;
    } else {
      sb.lb[i] = -p.lambda;
      sb.ub[i] = p.lambda;
    }
  }
  return sb;
}

ProblemInstance generate_instance(ProblemKind kind, std::size_t n, std::size_t m,
                                  std::uint64_t instance_seed) {
  Rng rng(instance_seed);
  Mat a(m, n);
  for (double& v : a.data) v = rng.normal();
  Vec b(m);
  if (kind == ProblemKind::kLasso) {
    // Planted sparse signal: ceil(0.1 n) nonzero normal entries, noise 0.01.
    const std::size_t k = (n + 9) / 10;
    Vec x_nat(n, 0.0);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
      std::swap(idx[i], idx[j]);
      x_nat[idx[i]] = rng.normal();
    }
    b = matvec(a, x_nat);
    for (double& v : b) v += 0.01 * rng.normal();
  } else {
    const Vec w_nat = rng.normal_vector(n);
    const Vec z = matvec(a, w_nat);
    for (std::size_t i = 0; i < m; ++i) {
      b[i] = rng.uniform01() < stable_sigmoid(z[i]) ? 1.0 : 0.0;
    }
  }
  return ProblemInstance::make(kind, std::move(a), std::move(b), 0.1, {}, instance_seed);
}

std::vector<ProblemInstance> generate_dataset(ProblemKind kind, std::size_t n,
                                              std::size_t m, std::size_t count,
                                              std::uint64_t seed) {
  if (n < 1 || m < 1 || count < 1) throw UsageError("generate_dataset: n, m, count must be >= 1");
  std::vector<ProblemInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(generate_instance(kind, n, m, Rng::derive_seed(seed, i)));
  }
  return out;
}

Label generate_label(const ProblemInstance& p) {
  const Vec x0(p.dim(), 0.0);
  const SolverTrajectory traj = run_fista(p, x0, 5000);
  Label lab;
  lab.x_star = traj.iterates.back();
  lab.f_star = traj.objectives.back();
  return lab;
}

std::string dataset_record_line(const DatasetRecord& rec) {
  std::ostringstream os;
  os << "kind=" << to_string(rec.kind) << " n=" << rec.n << " m=" << rec.m
     << " lambda=" << format_double(rec.lambda) << " seed=" << rec.seed;
  return os.str();
}

DatasetRecord parse_dataset_record(const std::string& line) {
  DatasetRecord rec{ProblemKind::kLasso, 0, 0, 0.0, 0};
  std::istringstream is(line);
  std::string tok;
  bool have_kind = false, have_n = false, have_m = false, have_lambda = false, have_seed = false;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw UsageError("dataset record: bad token '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "kind") {
      rec.kind = problem_kind_from_string(val);
      have_kind = true;
    } else if (key == "n") {
      rec.n = std::stoull(val);
      have_n = true;
    } else if (key == "m") {
      rec.m = std::stoull(val);
      have_m = true;
    } else if (key == "lambda") {
      rec.lambda = std::stod(val);
      have_lambda = true;
    } else if (key == "seed") {
      rec.seed = std::stoull(val);
      have_seed = true;
    } else {
      throw UsageError("dataset record: unknown key '" + key + "'");
    }
  }
  if (!(have_kind && have_n && have_m && have_lambda && have_seed)) {
    throw UsageError("dataset record: missing fields in '" + line + "'");
  }
  return rec;
}

ProblemInstance instantiate(const DatasetRecord& rec) {
  ProblemInstance p = generate_instance(rec.kind, rec.n, rec.m, rec.seed);
  if (rec.lambda != p.lambda) {
    p.lambda = rec.lambda;
  }
  return p;
}

}  // namespace goml2o
