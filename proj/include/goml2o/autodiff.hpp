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

#ifndef GOML2O_AUTODIFF_HPP
#define GOML2O_AUTODIFF_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "goml2o/numeric.hpp"

namespace goml2o {
namespace ad {

// Reverse-mode scalar tape. Nodes are append-only; parents always have
// smaller indices, so one reverse sweep computes all adjoints.
enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kExp,
  kLog,
  kTanh,
  kSigmoid,
  kSoftplus,
  kMax0,
  // Fused forms. Not part of the public forward_op surface; they keep the
  // tape small in the dot-product-heavy recurrent nets.
  kAddConst,   // a + aux
  kMulConst,   // a * aux
  kRsubConst,  // aux - a
  kFma,        // a * b + c      (c is the third parent)
  kFmaConst,   // a * aux + b
};

class Tape;

// Lightweight handle to one tape node.
struct Val {
  Tape* tape = nullptr;
  std::int64_t id = -1;

  double value() const;
  double grad() const;
};

class Tape {
 public:
  Tape() = default;
  explicit Tape(std::size_t reserve_nodes) { reserve(reserve_nodes); }

  void reserve(std::size_t n);
  std::size_t size() const { return data_.size(); }

  Val leaf(double value);

  // Generic entry point matching the spec surface: one of the named ops
  // applied to nodes that all live on this tape.
  Val forward_op(Op op, std::span<const Val> args);

  // Typed builders used by the hot paths.
  Val add(Val a, Val b);
  Val sub(Val a, Val b);
  Val mul(Val a, Val b);
  Val div(Val a, Val b);
  Val neg(Val a);
  Val exp_(Val a);
  Val log_(Val a);
  Val tanh_(Val a);
  Val sigmoid_(Val a);
  Val softplus_(Val a);
  Val max0(Val a);
  Val add_const(Val a, double c);
  Val mul_const(Val a, double c);
  Val rsub_const(double c, Val a);       // c - a
  Val fma_(Val a, Val b, Val c);         // a * b + c (two rounding steps)
  Val fma_const(Val a, double c, Val b);  // a * c + b

  double value(std::int64_t id) const { return data_[id]; }
  double grad(std::int64_t id) const { return grad_[id]; }
  Op op(std::int64_t id) const { return op_[id]; }
  std::vector<std::int64_t> parents(std::int64_t id) const;

  // Registers a truncation point at the current end of the tape and returns
  // its handle. detach() activates it: later backward passes treat the
  // recorded position as a barrier and do not propagate adjoints into
  // non-leaf nodes created before it. Leaves (weights, inputs) keep
  // receiving contributions from their uses after the barrier.
  std::size_t checkpoint();
  void detach(std::size_t checkpoint_handle);

  // Accumulates d(root)/d(node) into grad for every node reachable from
  // root; all other grads are 0. grad(root) ends at exactly 1.0.
  void backward(Val root);

  // Recomputes every non-leaf primal from the leaves, in order.
  void replay();

  std::size_t last_backward_visits() const { return last_backward_visits_; }

 private:
  std::int64_t push(Op op, std::int64_t a, std::int64_t b, double aux, double value);
  std::int64_t push3(Op op, std::int64_t a, std::int64_t b, std::int64_t c, double value);
  std::int64_t barrier_for(std::int64_t root) const;

  std::vector<double> data_;
  std::vector<double> grad_;
  std::vector<double> aux_;
  std::vector<std::int32_t> pa_;
  std::vector<std::int32_t> pb_;
  std::vector<std::int32_t> pc_;
  std::vector<Op> op_;
  std::vector<std::int64_t> checkpoints_;
  std::vector<std::int64_t> detached_;  // sorted barrier positions
  std::size_t last_backward_visits_ = 0;
};

inline double Val::value() const { return tape->value(id); }
inline double Val::grad() const { return tape->grad(id); }

// Operator sugar plus an overload set mirrored on plain double, so the model
// core can be written once and instantiated for both the training (tape) and
// inference (double) paths.
inline Val operator+(Val a, Val b) { return a.tape->add(a, b); }
inline Val operator-(Val a, Val b) { return a.tape->sub(a, b); }
inline Val operator*(Val a, Val b) { return a.tape->mul(a, b); }
inline Val operator/(Val a, Val b) { return a.tape->div(a, b); }
inline Val operator-(Val a) { return a.tape->neg(a); }

inline Val ad_exp(Val a) { return a.tape->exp_(a); }
inline Val ad_log(Val a) { return a.tape->log_(a); }
inline Val ad_tanh(Val a) { return a.tape->tanh_(a); }
inline Val ad_sigmoid(Val a) { return a.tape->sigmoid_(a); }
inline Val ad_softplus(Val a) { return a.tape->softplus_(a); }
inline Val ad_max0(Val a) { return a.tape->max0(a); }
inline Val ad_scale(Val a, double c) { return a.tape->mul_const(a, c); }
inline Val ad_shift(Val a, double c) { return a.tape->add_const(a, c); }
inline Val ad_rsub(double c, Val a) { return a.tape->rsub_const(c, a); }
inline Val ad_fma(Val a, Val b, Val c) { return a.tape->fma_(a, b, c); }
inline Val ad_fma_const(Val a, double c, Val b) { return a.tape->fma_const(a, c, b); }
inline double ad_primal(Val a) { return a.value(); }

}  // namespace ad

// Plain-double counterparts of the tape builders. They live directly in
// goml2o so the templated model core finds them by ordinary lookup, while
// the ad::Val overloads above are found by argument-dependent lookup.
inline double ad_exp(double a) { return std::exp(a); }
inline double ad_log(double a) { return std::log(a); }
inline double ad_tanh(double a) { return std::tanh(a); }
inline double ad_sigmoid(double a) { return stable_sigmoid(a); }
inline double ad_softplus(double a) { return stable_softplus(a); }
inline double ad_max0(double a) { return relu0(a); }
inline double ad_scale(double a, double c) { return a * c; }
inline double ad_shift(double a, double c) { return a + c; }
inline double ad_rsub(double c, double a) { return c - a; }
// Two rounding steps on purpose, matching the tape's forward computation.
inline double ad_fma(double a, double b, double c) { return a * b + c; }
inline double ad_fma_const(double a, double c, double b) { return a * c + b; }
inline double ad_primal(double a) { return a; }

}  // namespace goml2o

#endif  // GOML2O_AUTODIFF_HPP
