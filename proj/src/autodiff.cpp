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

#include "goml2o/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "goml2o/common.hpp"

namespace goml2o {
namespace ad {

void Tape::reserve(std::size_t n) {
  data_.reserve(n);
  grad_.reserve(n);
  aux_.reserve(n);
  pa_.reserve(n);
  pb_.reserve(n);
  pc_.reserve(n);
  op_.reserve(n);
}

std::int64_t Tape::push(Op op, std::int64_t a, std::int64_t b, double aux, double value) {
  data_.push_back(value);
  grad_.push_back(0.0);
  aux_.push_back(aux);
  pa_.push_back(static_cast<std::int32_t>(a));
  pb_.push_back(static_cast<std::int32_t>(b));
  pc_.push_back(-1);
  op_.push_back(op);
  return static_cast<std::int64_t>(data_.size()) - 1;
}

std::int64_t Tape::push3(Op op, std::int64_t a, std::int64_t b, std::int64_t c, double value) {
  data_.push_back(value);
  grad_.push_back(0.0);
  aux_.push_back(0.0);
  pa_.push_back(static_cast<std::int32_t>(a));
  pb_.push_back(static_cast<std::int32_t>(b));
  pc_.push_back(static_cast<std::int32_t>(c));
  op_.push_back(op);
  return static_cast<std::int64_t>(data_.size()) - 1;
}

Val Tape::leaf(double value) { return {this, push(Op::kLeaf, -1, -1, 0.0, value)}; }

Val Tape::add(Val a, Val b) { return {this, push(Op::kAdd, a.id, b.id, 0.0, data_[a.id] + data_[b.id])}; }
Val Tape::sub(Val a, Val b) { return {this, push(Op::kSub, a.id, b.id, 0.0, data_[a.id] - data_[b.id])}; }
Val Tape::mul(Val a, Val b) { return {this, push(Op::kMul, a.id, b.id, 0.0, data_[a.id] * data_[b.id])}; }

Val Tape::div(Val a, Val b) {
  if (data_[b.id] == 0.0) throw std::domain_error("autodiff: division by zero");
  return {this, push(Op::kDiv, a.id, b.id, 0.0, data_[a.id] / data_[b.id])};
}

Val Tape::neg(Val a) { return {this, push(Op::kNeg, a.id, -1, 0.0, -data_[a.id])}; }
Val Tape::exp_(Val a) { return {this, push(Op::kExp, a.id, -1, 0.0, std::exp(data_[a.id]))}; }

Val Tape::log_(Val a) {
  if (data_[a.id] <= 0.0) throw std::domain_error("autodiff: log of non-positive value");
  return {this, push(Op::kLog, a.id, -1, 0.0, std::log(data_[a.id]))};
}

Val Tape::tanh_(Val a) { return {this, push(Op::kTanh, a.id, -1, 0.0, std::tanh(data_[a.id]))}; }
Val Tape::sigmoid_(Val a) { return {this, push(Op::kSigmoid, a.id, -1, 0.0, stable_sigmoid(data_[a.id]))}; }
Val Tape::softplus_(Val a) { return {this, push(Op::kSoftplus, a.id, -1, 0.0, stable_softplus(data_[a.id]))}; }
Val Tape::max0(Val a) { return {this, push(Op::kMax0, a.id, -1, 0.0, relu0(data_[a.id]))}; }
Val Tape::add_const(Val a, double c) { return {this, push(Op::kAddConst, a.id, -1, c, data_[a.id] + c)}; }
Val Tape::mul_const(Val a, double c) { return {this, push(Op::kMulConst, a.id, -1, c, data_[a.id] * c)}; }
Val Tape::rsub_const(double c, Val a) { return {this, push(Op::kRsubConst, a.id, -1, c, c - data_[a.id])}; }
Val Tape::fma_(Val a, Val b, Val c) {
  return {this, push3(Op::kFma, a.id, b.id, c.id, data_[a.id] * data_[b.id] + data_[c.id])};
}
Val Tape::fma_const(Val a, double c, Val b) {
  return {this, push(Op::kFmaConst, a.id, b.id, c, data_[a.id] * c + data_[b.id])};
}

Val Tape::forward_op(Op op, std::span<const Val> args) {
  for (const Val& v : args) {
    if (v.tape != this) throw UsageError("forward_op: argument lives on a different tape");
  }
  auto need = [&](std::size_t n) {
    if (args.size() != n) throw UsageError("forward_op: wrong argument count");
  };
  switch (op) {
    case Op::kAdd: need(2); return add(args[0], args[1]);
    case Op::kSub: need(2); return sub(args[0], args[1]);
    case Op::kMul: need(2); return mul(args[0], args[1]);
    case Op::kDiv: need(2); return div(args[0], args[1]);
    case Op::kNeg: need(1); return neg(args[0]);
    case Op::kExp: need(1); return exp_(args[0]);
    case Op::kLog: need(1); return log_(args[0]);
    case Op::kTanh: need(1); return tanh_(args[0]);
    case Op::kSigmoid: need(1); return sigmoid_(args[0]);
    case Op::kSoftplus: need(1); return softplus_(args[0]);
    case Op::kMax0: need(1); return max0(args[0]);
    default: throw UsageError("forward_op: op is not a public elementary op");
  }
}

std::vector<std::int64_t> Tape::parents(std::int64_t id) const {
  std::vector<std::int64_t> out;
  if (pa_[id] >= 0) out.push_back(pa_[id]);
  if (pb_[id] >= 0) out.push_back(pb_[id]);
  if (pc_[id] >= 0) out.push_back(pc_[id]);
  return out;
}

std::size_t Tape::checkpoint() {
  checkpoints_.push_back(static_cast<std::int64_t>(data_.size()));
  return checkpoints_.size() - 1;
}

void Tape::detach(std::size_t checkpoint_handle) {
  if (checkpoint_handle >= checkpoints_.size()) {
    throw UsageError("detach: unknown checkpoint");
  }
  const std::int64_t pos = checkpoints_[checkpoint_handle];
  auto it = std::lower_bound(detached_.begin(), detached_.end(), pos);
  if (it == detached_.end() || *it != pos) detached_.insert(it, pos);
}

std::int64_t Tape::barrier_for(std::int64_t root) const {
  std::int64_t barrier = 0;
  for (std::int64_t pos : detached_) {
    if (pos <= root) barrier = std::max(barrier, pos);
  }
  return barrier;
}

void Tape::backward(Val root) {
  if (root.tape != this) throw UsageError("backward: root lives on a different tape");
  const std::int64_t n = static_cast<std::int64_t>(data_.size());
  if (n == 0) return;
  std::fill(grad_.begin(), grad_.end(), 0.0);
  grad_[root.id] = 1.0;

  const std::int64_t barrier = barrier_for(root.id);
  std::size_t visits = 0;
  for (std::int64_t i = root.id; i >= 0; --i) {
    ++visits;
    const double g = grad_[i];
    if (g == 0.0) continue;
    const std::int64_t a = pa_[i];
    const std::int64_t b = pb_[i];
    // The barrier stops adjoint flow into pre-checkpoint interior nodes;
    // leaves keep accumulating from post-checkpoint uses.
    auto blocked = [&](std::int64_t p) { return p < barrier && op_[p] != Op::kLeaf; };
    switch (op_[i]) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
        if (!blocked(a)) grad_[a] += g;
        if (!blocked(b)) grad_[b] += g;
        break;
      case Op::kSub:
        if (!blocked(a)) grad_[a] += g;
        if (!blocked(b)) grad_[b] -= g;
        break;
      case Op::kMul:
        if (!blocked(a)) grad_[a] += g * data_[b];
        if (!blocked(b)) grad_[b] += g * data_[a];
        break;
      case Op::kDiv:
        if (!blocked(a)) grad_[a] += g / data_[b];
        if (!blocked(b)) grad_[b] -= g * data_[i] / data_[b];
        break;
      case Op::kNeg:
        if (!blocked(a)) grad_[a] -= g;
        break;
      case Op::kExp:
        if (!blocked(a)) grad_[a] += g * data_[i];
        break;
      case Op::kLog:
        if (!blocked(a)) grad_[a] += g / data_[a];
        break;
      case Op::kTanh:
        if (!blocked(a)) grad_[a] += g * (1.0 - data_[i] * data_[i]);
        break;
      case Op::kSigmoid:
        if (!blocked(a)) grad_[a] += g * data_[i] * (1.0 - data_[i]);
        break;
      case Op::kSoftplus:
        if (!blocked(a)) grad_[a] += g * stable_sigmoid(data_[a]);
        break;
      case Op::kMax0:
        // Subgradient 0 at the kink.
        if (!blocked(a) && data_[a] > 0.0) grad_[a] += g;
        break;
      case Op::kAddConst:
        if (!blocked(a)) grad_[a] += g;
        break;
      case Op::kMulConst:
        if (!blocked(a)) grad_[a] += g * aux_[i];
        break;
      case Op::kRsubConst:
        if (!blocked(a)) grad_[a] -= g;
        break;
      case Op::kFma: {
        const std::int64_t c = pc_[i];
        if (!blocked(a)) grad_[a] += g * data_[b];
        if (!blocked(b)) grad_[b] += g * data_[a];
        if (!blocked(c)) grad_[c] += g;
        break;
      }
      case Op::kFmaConst:
        if (!blocked(a)) grad_[a] += g * aux_[i];
        if (!blocked(b)) grad_[b] += g;
        break;
    }
  }
  last_backward_visits_ = visits;
}

void Tape::replay() {
  const std::int64_t n = static_cast<std::int64_t>(data_.size());
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t a = pa_[i];
    const std::int64_t b = pb_[i];
    switch (op_[i]) {
      case Op::kLeaf: break;
      case Op::kAdd: data_[i] = data_[a] + data_[b]; break;
      case Op::kSub: data_[i] = data_[a] - data_[b]; break;
      case Op::kMul: data_[i] = data_[a] * data_[b]; break;
      case Op::kDiv: data_[i] = data_[a] / data_[b]; break;
      case Op::kNeg: data_[i] = -data_[a]; break;
      case Op::kExp: data_[i] = std::exp(data_[a]); break;
      case Op::kLog: data_[i] = std::log(data_[a]); break;
      case Op::kTanh: data_[i] = std::tanh(data_[a]); break;
      case Op::kSigmoid: data_[i] = stable_sigmoid(data_[a]); break;
      case Op::kSoftplus: data_[i] = stable_softplus(data_[a]); break;
      case Op::kMax0: data_[i] = relu0(data_[a]); break;
      case Op::kAddConst: data_[i] = data_[a] + aux_[i]; break;
      case Op::kMulConst: data_[i] = data_[a] * aux_[i]; break;
      case Op::kRsubConst: data_[i] = aux_[i] - data_[a]; break;
      case Op::kFma: data_[i] = data_[a] * data_[b] + data_[pc_[i]]; break;
      case Op::kFmaConst: data_[i] = data_[a] * aux_[i] + data_[b]; break;
    }
  }
}

}  // namespace ad
}  // namespace goml2o
