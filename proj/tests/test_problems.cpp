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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "goml2o/problems.hpp"
#include "goml2o/rng.hpp"
#include "goml2o/solvers.hpp"
#include "oracles.hpp"

using namespace goml2o;

namespace {

Mat identity(std::size_t n) {
  Mat a(n, n);
  for (std::size_t i = 0; i < n; ++i) a.at(i, i) = 1.0;
  return a;
}

ProblemInstance tiny_lasso(Mat a, Vec b, double lambda, Vec t = {}) {
  return ProblemInstance::make(ProblemKind::kLasso, std::move(a), std::move(b), lambda,
                               std::move(t), 1);
}

}  // namespace

TEST_CASE("smoothness: identity, diagonal, tiny logistic") {
  CHECK(compute_smoothness(ProblemKind::kLasso, identity(2)) == doctest::Approx(1.0).epsilon(1e-9));

  Mat diag(2, 2);
  diag.at(0, 0) = 3.0;
  diag.at(1, 1) = 1.0;
  CHECK(compute_smoothness(ProblemKind::kLasso, diag) == doctest::Approx(9.0).epsilon(1e-9));

  // logistic rows (1,0) and (0,1): (1/2) I has top eigenvalue 1/2
  CHECK(compute_smoothness(ProblemKind::kLogistic, identity(2)) ==
        doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("smooth gradient closed forms and translation identity") {
  ProblemInstance p = tiny_lasso(identity(2), {1.0, 0.0}, 0.1);
  const Vec g = smooth_gradient(p, {0.0, 0.0});
  CHECK(g[0] == doctest::Approx(-1.0));
  CHECK(g[1] == doctest::Approx(0.0));

  ProblemInstance pt = p.with_translation({1.0, 0.0});
  const Vec gt = smooth_gradient(pt, {-1.0, 0.0});
  CHECK(gt[0] == doctest::Approx(-1.0));
  CHECK(gt[1] == doctest::Approx(0.0));

  // logistic, single a = (1), b = 1, x = 0: (h(0) - 1) * 1 = -0.5
  Mat a1(1, 1);
  a1.at(0, 0) = 1.0;
  ProblemInstance pl =
      ProblemInstance::make(ProblemKind::kLogistic, std::move(a1), {1.0}, 0.1, {}, 2);
  CHECK(smooth_gradient(pl, {0.0})[0] == doctest::Approx(-0.5));
}

TEST_CASE("translation identity is exact for objective and gradient") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    for (ProblemKind kind : {ProblemKind::kLasso, ProblemKind::kLogistic}) {
      ProblemInstance p = generate_instance(kind, 6, 9, rng.next_u64());
      Vec t = rng.normal_vector(6);
      ProblemInstance pt = p.with_translation(t);
      Vec x = rng.normal_vector(6);
      const Vec xt = add(x, t);
      CHECK(objective(pt, x) == objective(p, xt));
      const Vec g1 = smooth_gradient(pt, x);
      const Vec g2 = smooth_gradient(p, xt);
      for (std::size_t i = 0; i < 6; ++i) REQUIRE(g1[i] == g2[i]);
    }
  }
}

TEST_CASE("smooth gradient matches finite differences of the smooth part") {
  Rng rng(13);
  for (ProblemKind kind : {ProblemKind::kLasso, ProblemKind::kLogistic}) {
    ProblemInstance p = generate_instance(kind, 5, 8, 77);
    for (int trial = 0; trial < 100; ++trial) {
      Vec x = rng.normal_vector(5);
      const Vec g = smooth_gradient(p, x);
      for (std::size_t j = 0; j < 5; ++j) {
        auto f = [&](double v) {
          Vec xx = x;
          xx[j] = v;
          return smooth_objective(p, xx);
        };
        const double fd = goml2o::oracles::fd_partial(f, x[j]);
        REQUIRE(std::abs(g[j] - fd) / std::max(1.0, std::abs(fd)) <= 1e-6);
      }
    }
  }
}

TEST_CASE("prox_l1 frozen examples match the brute-force oracle") {
  // values pinned by the scalar grid + golden-section oracle
  CHECK(prox_l1_scalar(0.5, 0.1, 0.0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(prox_l1_scalar(0.05, 0.1, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(prox_l1_scalar(0.5, 0.1, 1.0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(goml2o::oracles::prox_scalar_bruteforce(0.5, 0.1, 0.0) ==
        doctest::Approx(0.4).epsilon(1e-7));
  CHECK(goml2o::oracles::prox_scalar_bruteforce(0.05, 0.1, 0.0) ==
        doctest::Approx(0.0).epsilon(1e-7));
  CHECK(goml2o::oracles::prox_scalar_bruteforce(0.5, 0.1, 1.0) ==
        doctest::Approx(0.4).epsilon(1e-7));
}

TEST_CASE("prox_l1 agrees with the oracle on random inputs") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const double xbar = rng.uniform(-4.0, 4.0);
    const double thr = rng.uniform(0.0, 2.0);
    const double t = rng.uniform(-3.0, 3.0);
    const double got = prox_l1_scalar(xbar, thr, t);
    const double want = goml2o::oracles::prox_scalar_bruteforce(xbar, thr, t);
    REQUIRE(std::abs(got - want) <= 1e-8);
  }
  CHECK_THROWS_AS((void)prox_l1_scalar(0.0, -1.0, 0.0), UsageError);
}

TEST_CASE("prox optimality: subgradient inclusion within 1e-10") {
  // 0 in lambda * d|z + t|_1 + (z - xbar) / p, checked through the bounds
  // interval at z. Scalar metric weight p with threshold = lambda * p.
  Rng rng(19);
  const double lambda = 0.3;
  for (int trial = 0; trial < 1000; ++trial) {
    const double p_i = rng.uniform(0.05, 3.0);
    const double xbar = rng.uniform(-4.0, 4.0);
    const double t = rng.uniform(-2.0, 2.0);
    const double z = prox_l1_scalar(xbar, lambda * p_i, t);
    const double resid = (xbar - z) / p_i;  // must lie in lambda * d|z + t|
    const double zi = z + t;
    double lo, hi;
    if (zi > 0.0) {
      lo = hi = lambda;
    } else if (zi < 0.0) {
      lo = hi = -lambda;
    } else {
      lo = -lambda;
      hi = lambda;
    }
    REQUIRE(resid >= lo - 1e-10);
    REQUIRE(resid <= hi + 1e-10);
  }
}

TEST_CASE("subgradient bounds structure") {
  ProblemInstance p = tiny_lasso(identity(3), {0.0, 0.0, 0.0}, 0.1);
  const SubgradientBounds sb = subgradient_bounds(p, {2.0, 0.0, -3.0});
  CHECK(sb.lb[0] == 0.1);
  CHECK(sb.ub[0] == 0.1);
  CHECK(sb.lb[1] == -0.1);
  CHECK(sb.ub[1] == 0.1);
  CHECK(sb.lb[2] == -0.1);
  CHECK(sb.ub[2] == -0.1);

  ProblemInstance p0 = tiny_lasso(identity(3), {0.0, 0.0, 0.0}, 0.0);
  const SubgradientBounds sb0 = subgradient_bounds(p0, {1.0, -1.0, 0.0});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(sb0.lb[i] == 0.0);
    CHECK(sb0.ub[i] == 0.0);
  }

  // translated kink: x = -1 with t = 1 sits at zero
  ProblemInstance p1 = tiny_lasso(identity(1), {0.0}, 0.1, {1.0});
  const SubgradientBounds sb1 = subgradient_bounds(p1, {-1.0});
  CHECK(sb1.lb[0] == -0.1);
  CHECK(sb1.ub[0] == 0.1);
}

TEST_CASE("dataset generation shapes, lambda, determinism") {
  const auto ds = generate_dataset(ProblemKind::kLasso, 20, 10, 3, 7);
  CHECK(ds.size() == 3);
  for (const auto& p : ds) {
    CHECK(p.a.rows == 10);
    CHECK(p.a.cols == 20);
    CHECK(p.lambda == 0.1);
    CHECK(p.smoothness > 0.0);
  }
  const auto ds2 = generate_dataset(ProblemKind::kLasso, 20, 10, 3, 7);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    REQUIRE(ds[i].a.data == ds2[i].a.data);
    REQUIRE(ds[i].b == ds2[i].b);
  }
  const auto dl = generate_dataset(ProblemKind::kLogistic, 5, 12, 1, 9);
  CHECK(dl[0].a.rows == 12);
  CHECK(dl[0].a.cols == 5);
  for (double v : dl[0].b) CHECK((v == 0.0 || v == 1.0));

  CHECK_THROWS_AS(generate_dataset(ProblemKind::kLasso, 0, 1, 1, 1), UsageError);
}

TEST_CASE("planted LASSO model: ~0.1n nonzeros in the signal") {
  // b = A x_nat + small noise, so ||b|| should be comparable to ||A x_nat||;
  // sanity-check the generator produces a consistent system.
  ProblemInstance p = generate_instance(ProblemKind::kLasso, 50, 25, 4242);
  CHECK(norm2(p.b) > 0.1);
}

TEST_CASE("labels: separable closed form and unregularized case") {
  ProblemInstance p = tiny_lasso(identity(2), {1.0, 0.0}, 0.1);
  const Label lab = generate_label(p);
  CHECK(lab.x_star[0] == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(lab.x_star[1] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(lab.f_star == doctest::Approx(0.095).epsilon(1e-9));

  ProblemInstance p0 = tiny_lasso(identity(2), {0.3, -0.7}, 0.0);
  const Label lab0 = generate_label(p0);
  CHECK(lab0.x_star[0] == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(lab0.x_star[1] == doctest::Approx(-0.7).epsilon(1e-10));
  CHECK(lab0.f_star == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("label agrees with a long ISTA run") {
  ProblemInstance p = generate_instance(ProblemKind::kLasso, 50, 25, 555);
  const Label lab = generate_label(p);
  const SolverTrajectory ista = run_ista(p, Vec(p.dim(), 0.0), 100000);
  CHECK(std::abs(lab.f_star - ista.objectives.back()) <= 1e-8);
}

TEST_CASE("one ISTA step never increases the objective") {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    ProblemInstance p = generate_instance(
        trial % 2 == 0 ? ProblemKind::kLasso : ProblemKind::kLogistic, 6, 8, rng.next_u64());
    Vec x0 = rng.normal_vector(6);
    const SolverTrajectory traj = run_ista(p, x0, 1);
    REQUIRE(traj.objectives[1] <= traj.objectives[0] + 1e-12);
  }
}

TEST_CASE("dataset record round-trips through the manifest line") {
  DatasetRecord rec{ProblemKind::kLogistic, 50, 1000, 0.1, 123456789ULL};
  const DatasetRecord back = parse_dataset_record(dataset_record_line(rec));
  CHECK(back.kind == rec.kind);
  CHECK(back.n == rec.n);
  CHECK(back.m == rec.m);
  CHECK(back.lambda == rec.lambda);
  CHECK(back.seed == rec.seed);
  CHECK_THROWS_AS(parse_dataset_record("kind=lasso n=5"), UsageError);
  CHECK_THROWS_AS(parse_dataset_record("bogus"), UsageError);
}
