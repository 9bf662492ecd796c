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
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "goml2o/autodiff.hpp"
#include "goml2o/common.hpp"
#include "goml2o/rng.hpp"

using goml2o::Rng;
using goml2o::UsageError;
using goml2o::ad::Op;
using goml2o::ad::Tape;
using goml2o::ad::Val;

namespace {

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// Central finite differences of a scalar function rebuilt per evaluation.
double fd_grad(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("elementary op primal values") {
  Tape tape;
  Val z = tape.leaf(0.0);
  CHECK(tape.sigmoid_(z).value() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(tape.softplus_(z).value() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // stable sigmoid must not overflow far from the origin
  Val big = tape.leaf(800.0);
  Val neg_big = tape.leaf(-800.0);
  CHECK(tape.sigmoid_(big).value() == doctest::Approx(1.0));
  CHECK(tape.sigmoid_(neg_big).value() == doctest::Approx(0.0));
  CHECK(std::isfinite(tape.softplus_(big).value()));
}

TEST_CASE("mul backward gives product-rule grads") {
  Tape tape;
  Val a = tape.leaf(3.0);
  Val b = tape.leaf(4.0);
  Val c = a * b;
  tape.backward(c);
  CHECK(c.grad() == 1.0);
  CHECK(a.grad() == 4.0);
  CHECK(b.grad() == 3.0);
}

TEST_CASE("x^2 at x=3 has gradient 6") {
  Tape tape;
  Val x = tape.leaf(3.0);
  Val y = x * x;
  tape.backward(y);
  CHECK(x.grad() == doctest::Approx(6.0));
}

TEST_CASE("sigmoid(w*x) at w=0, x=1 has dw = 1/4") {
  Tape tape;
  Val w = tape.leaf(0.0);
  Val x = tape.leaf(1.0);
  Val y = tape.sigmoid_(w * x);
  tape.backward(y);
  CHECK(w.grad() == doctest::Approx(0.25));
}

TEST_CASE("every elementary op matches central finite differences") {
  Rng rng(20260810);
  struct OpCase {
    Op op;
    bool binary;
    // domain transform for sampled points
    std::function<double(double)> fix_a;
    std::function<double(double)> fix_b;
  };
  auto ident = [](double v) { return v; };
  auto positive = [](double v) { return std::abs(v) + 0.05; };
  auto away_from_zero = [](double v) { return v >= 0.0 ? v + 0.2 : v - 0.2; };
  std::vector<OpCase> cases = {
      {Op::kAdd, true, ident, ident},
      {Op::kSub, true, ident, ident},
      {Op::kMul, true, ident, ident},
      {Op::kDiv, true, ident, away_from_zero},
      {Op::kNeg, false, ident, ident},
      {Op::kExp, false, ident, ident},
      {Op::kLog, false, positive, ident},
      {Op::kTanh, false, ident, ident},
      {Op::kSigmoid, false, ident, ident},
      {Op::kSoftplus, false, ident, ident},
      {Op::kMax0, false, away_from_zero, ident},
  };
  for (const auto& oc : cases) {
    for (int trial = 0; trial < 1000; ++trial) {
      const double a0 = oc.fix_a(rng.uniform(-5.0, 5.0));
      const double b0 = oc.fix_b(rng.uniform(-5.0, 5.0));
      Tape tape;
      Val a = tape.leaf(a0);
      Val b = tape.leaf(b0);
      std::vector<Val> args = oc.binary ? std::vector<Val>{a, b} : std::vector<Val>{a};
      Val out = tape.forward_op(oc.op, args);
      tape.backward(out);

      auto eval = [&](double av, double bv) {
        Tape t2;
        Val x = t2.leaf(av);
        Val y = t2.leaf(bv);
        std::vector<Val> as = oc.binary ? std::vector<Val>{x, y} : std::vector<Val>{x};
        return t2.forward_op(oc.op, as).value();
      };
      const double fd_a = fd_grad([&](double v) { return eval(v, b0); }, a0);
      REQUIRE(rel_err(a.grad(), fd_a) <= 1e-6);
      if (oc.binary) {
        const double fd_b = fd_grad([&](double v) { return eval(a0, v); }, b0);
        REQUIRE(rel_err(b.grad(), fd_b) <= 1e-6);
      }
    }
  }
}

TEST_CASE("composite LSTM-style cell grad matches finite differences") {
  // h' = sigmoid(w_o) * tanh(sigmoid(w_f) * c + sigmoid(w_i) * tanh(w_g))
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::array<double, 5> w;
    for (auto& v : w) v = rng.uniform(-2.0, 2.0);
    auto forward = [](const std::array<double, 5>& ws, Tape& tape,
                      std::array<Val, 5>& leaves) {
      for (std::size_t i = 0; i < ws.size(); ++i) leaves[i] = tape.leaf(ws[i]);
      Val f = tape.sigmoid_(leaves[0]);
      Val i = tape.sigmoid_(leaves[1]);
      Val g = tape.tanh_(leaves[2]);
      Val o = tape.sigmoid_(leaves[3]);
      Val c = f * leaves[4] + i * g;
      return o * tape.tanh_(c);
    };
    Tape tape;
    std::array<Val, 5> leaves;
    Val out = forward(w, tape, leaves);
    tape.backward(out);
    for (std::size_t j = 0; j < w.size(); ++j) {
      auto f1 = [&](double v) {
        std::array<double, 5> w2 = w;
        w2[j] = v;
        Tape t2;
        std::array<Val, 5> l2;
        return forward(w2, t2, l2).value();
      };
      const double fd = fd_grad(f1, w[j], 1e-5);
      const double got = leaves[j].grad();
      REQUIRE(std::abs(got - fd) / std::max(1.0, std::abs(fd)) <= 1e-6);
    }
  }
}

TEST_CASE("backward is a single reverse sweep") {
  Tape tape;
  Val x = tape.leaf(0.3);
  Val acc = x;
  for (int i = 0; i < 500; ++i) acc = tape.tanh_(acc) + x;
  tape.backward(acc);
  CHECK(tape.last_backward_visits() <= 2 * tape.size());
}

TEST_CASE("replay reproduces primals bit-identically") {
  Rng rng(99);
  Tape tape;
  Val x = tape.leaf(rng.normal());
  Val y = tape.leaf(rng.normal());
  Val acc = x * y;
  for (int i = 0; i < 200; ++i) {
    acc = tape.sigmoid_(acc * x) + tape.softplus_(y - acc);
  }
  std::vector<double> before(tape.size());
  for (std::size_t i = 0; i < tape.size(); ++i) before[i] = tape.value(i);
  tape.replay();
  for (std::size_t i = 0; i < tape.size(); ++i) {
    REQUIRE(tape.value(i) == before[i]);
  }
}

TEST_CASE("grad of unreachable nodes stays zero; root grad is one") {
  Tape tape;
  Val x = tape.leaf(2.0);
  Val unused = tape.exp_(x);
  Val y = x * x;
  tape.backward(y);
  CHECK(y.grad() == 1.0);
  CHECK(unused.grad() == 0.0);
}

TEST_CASE("detach truncates state chains but keeps direct leaf uses") {
  // w feeds every "step"; the running state crosses the barrier.
  Tape tape;
  Val w = tape.leaf(0.7);
  Val state = tape.leaf(1.0);
  for (int step = 1; step <= 20; ++step) state = tape.tanh_(state * w);
  const std::size_t cp = tape.checkpoint();
  tape.detach(cp);
  Val state2 = state;
  for (int step = 21; step <= 25; ++step) state2 = tape.tanh_(state2 * w);
  tape.backward(state2);
  const double truncated_grad = w.grad();

  // Reference: same 5 steps from the detached state treated as a constant.
  Tape ref;
  Val w2 = ref.leaf(0.7);
  Val s2 = ref.leaf(state.value());
  for (int step = 21; step <= 25; ++step) s2 = ref.tanh_(s2 * w2);
  ref.backward(s2);
  CHECK(truncated_grad == ref.grad(w2.id));
  CHECK(truncated_grad != 0.0);
}

TEST_CASE("detach at position zero leaves backward unchanged") {
  auto run = [](bool with_detach) {
    Tape tape;
    const std::size_t cp = tape.checkpoint();  // at position 0
    Val x = tape.leaf(0.4);
    Val y = x;
    for (int i = 0; i < 10; ++i) y = tape.tanh_(y * x);
    if (with_detach) tape.detach(cp);
    tape.backward(y);
    return tape.grad(x.id);
  };
  CHECK(run(true) == run(false));
}

TEST_CASE("rollout with detach every 20 yields 5 independent segments") {
  // 100 chained steps; detaching every 20 must make the segment gradients
  // equal to five isolated 20-step runs.
  Tape tape;
  Val w = tape.leaf(0.9);
  Val state = tape.leaf(0.5);
  std::vector<Val> seg_roots;
  std::vector<double> seg_entry;
  for (int seg = 0; seg < 5; ++seg) {
    if (seg > 0) {
      const std::size_t cp = tape.checkpoint();
      tape.detach(cp);
      state = tape.leaf(state.value());
    }
    seg_entry.push_back(state.value());
    for (int i = 0; i < 20; ++i) state = tape.tanh_(state * w);
    seg_roots.push_back(state);
  }
  for (int seg = 0; seg < 5; ++seg) {
    tape.backward(seg_roots[seg]);
    const double got = tape.grad(w.id);
    Tape ref;
    Val w2 = ref.leaf(0.9);
    Val s2 = ref.leaf(seg_entry[seg]);
    for (int i = 0; i < 20; ++i) s2 = ref.tanh_(s2 * w2);
    ref.backward(s2);
    REQUIRE(got == ref.grad(w2.id));
  }
}

TEST_CASE("domain and usage errors") {
  Tape tape;
  Val a = tape.leaf(1.0);
  Val zero = tape.leaf(0.0);
  Val neg = tape.leaf(-1.0);
  CHECK_THROWS_AS((void)tape.div(a, zero), std::domain_error);
  CHECK_THROWS_AS((void)tape.log_(zero), std::domain_error);
  CHECK_THROWS_AS((void)tape.log_(neg), std::domain_error);
  CHECK_THROWS_AS(tape.detach(42), UsageError);

  Tape other;
  Val b = other.leaf(2.0);
  std::vector<Val> mixed = {a, b};
  CHECK_THROWS_AS((void)tape.forward_op(Op::kAdd, mixed), UsageError);
  std::vector<Val> wrong_arity = {a};
  CHECK_THROWS_AS((void)tape.forward_op(Op::kAdd, wrong_arity), UsageError);
}

TEST_CASE("parents have strictly smaller ids") {
  Tape tape;
  Val x = tape.leaf(1.5);
  Val y = tape.sigmoid_(x) * x + tape.tanh_(x);
  for (std::int64_t id = 0; id <= y.id; ++id) {
    for (std::int64_t p : tape.parents(id)) REQUIRE(p < id);
  }
}
