/*
 Copyright 2026 The NODA Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include "noda/diffcore.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "noda/errors.hpp"

namespace noda {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_matrix(const Tensor& t) { return ConstMap(t.data().data(), t.rows(), t.cols()); }
ConstMap as_matrix(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return ConstMap(v.data(), rows, cols);
}
MutMap as_matrix(std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return MutMap(v.data(), rows, cols);
}

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tape& same_tape(Var a, Var b) {
  if (!a.valid() || !b.valid()) fail(ErrorKind::contract, "operation on an unbound Var");
  if (a.tape() != b.tape()) fail(ErrorKind::contract, "operands live on different tapes");
  return *a.tape();
}

Tape& tape_of(Var a) {
  if (!a.valid()) fail(ErrorKind::contract, "operation on an unbound Var");
  return *a.tape();
}

// True when `b` is broadcast across the rows of `a`.
bool broadcasts(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return false;
  if (a.rank() == 2 && b.size() == a.cols() && (b.rank() == 1 || (b.rank() == 2 && b.rows() == 1)))
    return true;
  fail(ErrorKind::dimension, std::string(op) + ": incompatible shapes " + shape_string(a.shape()) +
                                 " and " + shape_string(b.shape()));
}

template <class F>
Tensor binary(const Tensor& a, const Tensor& b, const char* op, F f) {
  const bool bc = broadcasts(a, b, op);
  Tensor out(a.shape());
  if (!bc) {
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  } else {
    const std::size_t rows = a.rows(), cols = a.cols();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = f(a[r * cols + c], b[c]);
  }
  return out;
}

template <class F>
Tensor unary(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

double softplus_value(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// --- Tensor ---------------------------------------------------------------

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor() : data_(1, 0.0) {}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(product(shape_), fill) {
  for (auto d : shape_)
    if (d == 0) fail(ErrorKind::dimension, "tensor dimensions must be positive");
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto d : shape_)
    if (d == 0) fail(ErrorKind::dimension, "tensor dimensions must be positive");
  if (product(shape_) != data_.size())
    fail(ErrorKind::dimension, "shape " + shape_string(shape_) + " does not match " +
                                   std::to_string(data_.size()) + " values");
}

Tensor Tensor::scalar(double value) { return Tensor({}, std::vector<double>{value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return Tensor({rows, cols}, std::move(data));
}

std::size_t Tensor::rows() const noexcept {
  if (shape_.size() < 2) return 1;
  return shape_[0];
}

std::size_t Tensor::cols() const noexcept {
  if (shape_.empty()) return 1;
  if (shape_.size() == 1) return shape_[0];
  return data_.size() / shape_[0];
}

double Tensor::item() const {
  if (data_.size() != 1) fail(ErrorKind::contract, "item() on tensor of shape " + shape_string(shape_));
  return data_[0];
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

std::size_t parameter_count(const ParamSet& params) {
  std::size_t n = 0;
  for (const auto& [name, t] : params) n += t.size();
  return n;
}

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::leaf: return "leaf";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::mul: return "mul";
    case OpKind::matmul: return "matmul";
    case OpKind::linear: return "linear";
    case OpKind::tanh: return "tanh";
    case OpKind::relu: return "relu";
    case OpKind::softplus: return "softplus";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::square: return "square";
    case OpKind::sum: return "sum";
    case OpKind::mean: return "mean";
    case OpKind::row_sum: return "row_sum";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::scale: return "scale";
    case OpKind::shift: return "shift";
    case OpKind::clip: return "clip";
    case OpKind::minimum: return "minimum";
  }
  return "?";
}

// --- Tape -----------------------------------------------------------------

const Tensor& Var::value() const {
  if (!tape_) fail(ErrorKind::contract, "value() on an unbound Var");
  return tape_->value(*this);
}

const Tensor& Tape::value(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) fail(ErrorKind::contract, "stale or foreign Var");
  return nodes_[v.id()].value;
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::variable(const std::string& name, Tensor value) {
  if (named_.count(name)) fail(ErrorKind::contract, "duplicate tape variable '" + name + "'");
  Node n;
  n.value = std::move(value);
  n.name = name;
  n.requires_grad = true;
  Var v = push(std::move(n));
  named_.emplace(name, v.id());
  return v;
}

Var Tape::param(const ParamSet& params, const std::string& name) {
  if (auto it = named_.find(name); it != named_.end()) return Var(this, it->second);
  auto p = params.find(name);
  if (p == params.end()) fail(ErrorKind::contract, "unknown parameter '" + name + "'");
  return variable(name, p->second);
}

void Tape::clear() {
  nodes_.clear();
  named_.clear();
}

Var Tape::record(OpKind kind, Tensor value, std::initializer_list<Var> inputs, OpAttrs attrs) {
  return record(kind, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), attrs);
}

Var Tape::record(OpKind kind, Tensor value, std::span<const Var> inputs, OpAttrs attrs) {
  if (!value.all_finite())
    fail(ErrorKind::domain, std::string("non-finite result of ") + to_string(kind));
  Node n;
  n.kind = kind;
  n.value = std::move(value);
  n.attrs = attrs;
  n.inputs.reserve(inputs.size());
  for (Var v : inputs) {
    if (v.tape() != this) fail(ErrorKind::contract, "operand from a different tape");
    n.inputs.push_back(v.id());
    n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
  }
  return push(std::move(n));
}

std::vector<double>& Tape::grad_of(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

GradMap Tape::backward(Var output) {
  if (output.tape() != this) fail(ErrorKind::contract, "backward on a Var from another tape");
  if (output.value().size() != 1)
    fail(ErrorKind::contract, "backward needs a scalar output, got shape " +
                                  shape_string(output.value().shape()));
  grad_of(output.id())[0] = 1.0;
  for (std::int64_t id = output.id(); id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.kind == OpKind::leaf || !n.requires_grad || n.grad.empty()) continue;
    propagate(static_cast<std::uint32_t>(id));
  }
  GradMap grads;
  for (const auto& [name, id] : named_) {
    Node& n = nodes_[id];
    if (n.grad.empty()) {
      grads.emplace(name, Tensor(n.value.shape()));
    } else {
      grads.emplace(name, Tensor(n.value.shape(), std::move(n.grad)));
    }
  }
  clear();
  return grads;
}

void Tape::propagate(std::uint32_t id) {
  // Copy what we need: grad_of() may allocate inside nodes_, but never resizes it.
  const Node& n = nodes_[id];
  const std::vector<double>& g = n.grad;
  const Tensor& out = n.value;
  auto in = [&](std::size_t k) -> const Node& { return nodes_[n.inputs[k]]; };
  auto wants = [&](std::size_t k) { return nodes_[n.inputs[k]].requires_grad; };

  switch (n.kind) {
    case OpKind::leaf:
      return;
    case OpKind::add:
    case OpKind::sub: {
      const double sign_b = n.kind == OpKind::add ? 1.0 : -1.0;
      if (wants(0)) {
        auto& ga = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (wants(1)) {
        auto& gb = grad_of(n.inputs[1]);
        if (gb.size() == g.size()) {
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign_b * g[i];
        } else {
          const std::size_t cols = gb.size();
          for (std::size_t i = 0; i < g.size(); ++i) gb[i % cols] += sign_b * g[i];
        }
      }
      return;
    }
    case OpKind::mul: {
      const Tensor& a = in(0).value;
      const Tensor& b = in(1).value;
      const bool bc = a.size() != b.size();
      const std::size_t cols = b.size();
      if (wants(0)) {
        auto& ga = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[bc ? i % cols : i];
      }
      if (wants(1)) {
        auto& gb = grad_of(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[bc ? i % cols : i] += g[i] * a[i];
      }
      return;
    }
    case OpKind::minimum: {
      const Tensor& a = in(0).value;
      const Tensor& b = in(1).value;
      const bool bc = a.size() != b.size();
      const std::size_t cols = b.size();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t j = bc ? i % cols : i;
        const bool to_a = a[i] <= b[j];
        if (to_a && wants(0)) grad_of(n.inputs[0])[i] += g[i];
        if (!to_a && wants(1)) grad_of(n.inputs[1])[j] += g[i];
      }
      return;
    }
    case OpKind::matmul: {
      const Tensor& a = in(0).value;
      const Tensor& b = in(1).value;
      auto gm = as_matrix(g, out.rows(), out.cols());
      if (wants(0)) {
        auto& ga = grad_of(n.inputs[0]);
        as_matrix(ga, a.rows(), a.cols()).noalias() += gm * as_matrix(b).transpose();
      }
      if (wants(1)) {
        auto& gb = grad_of(n.inputs[1]);
        as_matrix(gb, b.rows(), b.cols()).noalias() += as_matrix(a).transpose() * gm;
      }
      return;
    }
    case OpKind::linear: {
      const Tensor& x = in(0).value;
      const Tensor& w = in(1).value;
      auto gm = as_matrix(g, out.rows(), out.cols());
      if (wants(0)) {
        auto& gx = grad_of(n.inputs[0]);
        as_matrix(gx, x.rows(), x.cols()).noalias() += gm * as_matrix(w).transpose();
      }
      if (wants(1)) {
        auto& gw = grad_of(n.inputs[1]);
        as_matrix(gw, w.rows(), w.cols()).noalias() += as_matrix(x).transpose() * gm;
      }
      if (wants(2)) {
        auto& gbias = grad_of(n.inputs[2]);
        as_matrix(gbias, 1, out.cols()) += gm.colwise().sum();
      }
      return;
    }
    case OpKind::tanh: {
      if (!wants(0)) return;
      auto& ga = grad_of(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - out[i] * out[i]);
      return;
    }
    case OpKind::relu: {
      if (!wants(0)) return;
      const Tensor& a = in(0).value;
      auto& ga = grad_of(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += a[i] > 0.0 ? g[i] : 0.0;
      return;
    }
    case OpKind::softplus: {
      if (!wants(0)) return;
      const Tensor& a = in(0).value;
      auto& ga = grad_of(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * sigmoid(a[i]);
      return;
    }
    case OpKind::exp: {
      if (!wants(0)) return;
      auto& ga = grad_of(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * out[i];
      return;
    }
    case OpKind::log: {
      if (!wants(0)) return;
      const Tensor& a = in(0).value;
      auto& ga = grad_of(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / a[i];
      return;
    }
    case OpKind::square: {
      if (!wants(0)) return;
      const Tensor& a = in(0).value;
      auto& ga = grad_of(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * g[i] * a[i];
      return;
    }
    case OpKind::sum:
    case OpKind::mean: {
      if (!wants(0)) return;
      auto& ga = grad_of(n.inputs[0]);
      const double d = n.kind == OpKind::sum ? g[0] : g[0] / static_cast<double>(ga.size());
      for (double& v : ga) v += d;
      return;
    }
    case OpKind::row_sum: {
      if (!wants(0)) return;
      auto& ga = grad_of(n.inputs[0]);
      const std::size_t cols = ga.size() / g.size();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i / cols];
      return;
    }
    case OpKind::concat: {
      const std::size_t rows = out.rows(), total = out.cols();
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const std::size_t cols = in(k).value.cols();
        if (wants(k)) {
          auto& gk = grad_of(n.inputs[k]);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) gk[r * cols + c] += g[r * total + offset + c];
        }
        offset += cols;
      }
      return;
    }
    case OpKind::slice: {
      if (!wants(0)) return;
      auto& ga = grad_of(n.inputs[0]);
      const std::size_t rows = out.rows(), width = out.cols();
      const std::size_t src_cols = in(0).value.cols();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < width; ++c)
          ga[r * src_cols + n.attrs.begin + c] += g[r * width + c];
      return;
    }
    case OpKind::scale: {
      if (!wants(0)) return;
      auto& ga = grad_of(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.attrs.a * g[i];
      return;
    }
    case OpKind::shift: {
      if (!wants(0)) return;
      auto& ga = grad_of(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      return;
    }
    case OpKind::clip: {
      if (!wants(0)) return;
      const Tensor& a = in(0).value;
      auto& ga = grad_of(n.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (a[i] >= n.attrs.a && a[i] <= n.attrs.b) ga[i] += g[i];
      return;
    }
  }
}

// --- operations -----------------------------------------------------------

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  return t.record(OpKind::add, binary(a.value(), b.value(), "add", std::plus<>()), {a, b});
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  return t.record(OpKind::sub, binary(a.value(), b.value(), "sub", std::minus<>()), {a, b});
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  return t.record(OpKind::mul, binary(a.value(), b.value(), "mul", std::multiplies<>()), {a, b});
}

Var minimum(Var a, Var b) {
  Tape& t = same_tape(a, b);
  return t.record(OpKind::minimum,
                  binary(a.value(), b.value(), "minimum", [](double x, double y) { return x <= y ? x : y; }),
                  {a, b});
}

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows())
    fail(ErrorKind::dimension, "matmul: incompatible shapes " + shape_string(av.shape()) + " and " +
                                   shape_string(bv.shape()));
  std::vector<double> tmp(av.rows() * bv.cols());
  as_matrix(tmp, av.rows(), bv.cols()).noalias() = as_matrix(av) * as_matrix(bv);
  return t.record(OpKind::matmul, Tensor({av.rows(), bv.cols()}, std::move(tmp)), {a, b});
}

Var linear(Var x, Var weight, Var bias) {
  Tape& t = same_tape(x, weight);
  same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  if (xv.rank() != 2 || wv.rank() != 2 || xv.cols() != wv.rows() || bv.size() != wv.cols())
    fail(ErrorKind::dimension, "linear: incompatible shapes " + shape_string(xv.shape()) + ", " +
                                   shape_string(wv.shape()) + ", " + shape_string(bv.shape()));
  std::vector<double> tmp(xv.rows() * wv.cols());
  auto m = as_matrix(tmp, xv.rows(), wv.cols());
  m.noalias() = as_matrix(xv) * as_matrix(wv);
  m.rowwise() += as_matrix(bv.values(), 1, wv.cols()).row(0);
  return t.record(OpKind::linear, Tensor({xv.rows(), wv.cols()}, std::move(tmp)), {x, weight, bias});
}

Var tanh(Var a) {
  return tape_of(a).record(OpKind::tanh, unary(a.value(), [](double x) { return std::tanh(x); }), {a});
}

Var relu(Var a) {
  return tape_of(a).record(OpKind::relu, unary(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }), {a});
}

Var softplus(Var a) {
  return tape_of(a).record(OpKind::softplus, unary(a.value(), softplus_value), {a});
}

Var exp(Var a) {
  return tape_of(a).record(OpKind::exp, unary(a.value(), [](double x) { return std::exp(x); }), {a});
}

Var log(Var a) {
  for (double x : a.value().data())
    if (!(x > 0.0)) fail(ErrorKind::domain, "log of non-positive value " + std::to_string(x));
  return tape_of(a).record(OpKind::log, unary(a.value(), [](double x) { return std::log(x); }), {a});
}

Var square(Var a) {
  return tape_of(a).record(OpKind::square, unary(a.value(), [](double x) { return x * x; }), {a});
}

Var sum(Var a) {
  const auto d = a.value().data();
  return tape_of(a).record(OpKind::sum, Tensor::scalar(std::accumulate(d.begin(), d.end(), 0.0)), {a});
}

Var mean(Var a) {
  const auto d = a.value().data();
  const double s = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  return tape_of(a).record(OpKind::mean, Tensor::scalar(s), {a});
}

Var row_sum(Var a) {
  const Tensor& av = a.value();
  if (av.rank() != 2) fail(ErrorKind::dimension, "row_sum needs a rank-2 tensor");
  Tensor out({av.rows(), 1});
  for (std::size_t r = 0; r < av.rows(); ++r) {
    const auto row = av.row(r);
    out[r] = std::accumulate(row.begin(), row.end(), 0.0);
  }
  return tape_of(a).record(OpKind::row_sum, std::move(out), {a});
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorKind::contract, "concat of nothing");
  Tape& t = tape_of(parts[0]);
  const std::size_t rows = parts[0].value().rows();
  std::size_t total = 0;
  for (Var p : parts) {
    same_tape(parts[0], p);
    if (p.value().rank() != 2 || p.value().rows() != rows)
      fail(ErrorKind::dimension, "concat: part of shape " + shape_string(p.value().shape()) +
                                     " does not have " + std::to_string(rows) + " rows");
    total += p.value().cols();
  }
  Tensor out({rows, total});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pv.row(r).begin(), pv.cols(), out.data().begin() + r * total + offset);
    offset += pv.cols();
  }
  return t.record(OpKind::concat, std::move(out), parts);
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice(Var a, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  if (av.rank() != 2 || begin >= end || end > av.cols())
    fail(ErrorKind::dimension, "slice [" + std::to_string(begin) + "," + std::to_string(end) +
                                   ") out of range for " + shape_string(av.shape()));
  const std::size_t width = end - begin;
  Tensor out({av.rows(), width});
  for (std::size_t r = 0; r < av.rows(); ++r)
    std::copy_n(av.row(r).begin() + static_cast<std::ptrdiff_t>(begin), width, out.row(r).begin());
  OpAttrs attrs;
  attrs.begin = begin;
  attrs.end = end;
  return tape_of(a).record(OpKind::slice, std::move(out), {a}, attrs);
}

Var scale(Var a, double factor) {
  OpAttrs attrs;
  attrs.a = factor;
  return tape_of(a).record(OpKind::scale, unary(a.value(), [factor](double x) { return factor * x; }),
                           {a}, attrs);
}

Var shift(Var a, double offset) {
  OpAttrs attrs;
  attrs.a = offset;
  return tape_of(a).record(OpKind::shift, unary(a.value(), [offset](double x) { return x + offset; }),
                           {a}, attrs);
}

Var clip(Var a, double lo, double hi) {
  if (!(lo <= hi)) fail(ErrorKind::contract, "clip with lo > hi");
  OpAttrs attrs;
  attrs.a = lo;
  attrs.b = hi;
  return tape_of(a).record(OpKind::clip,
                           unary(a.value(), [lo, hi](double x) { return std::clamp(x, lo, hi); }), {a},
                           attrs);
}

Var apply_op(OpKind kind, std::span<const Var> inputs, const OpAttrs& attrs) {
  auto need = [&](std::size_t n) {
    if (inputs.size() != n)
      fail(ErrorKind::contract, std::string(to_string(kind)) + " takes " + std::to_string(n) +
                                    " inputs, got " + std::to_string(inputs.size()));
  };
  switch (kind) {
    case OpKind::add: need(2); return add(inputs[0], inputs[1]);
    case OpKind::sub: need(2); return sub(inputs[0], inputs[1]);
    case OpKind::mul: need(2); return mul(inputs[0], inputs[1]);
    case OpKind::minimum: need(2); return minimum(inputs[0], inputs[1]);
    case OpKind::matmul: need(2); return matmul(inputs[0], inputs[1]);
    case OpKind::linear: need(3); return linear(inputs[0], inputs[1], inputs[2]);
    case OpKind::tanh: need(1); return tanh(inputs[0]);
    case OpKind::relu: need(1); return relu(inputs[0]);
    case OpKind::softplus: need(1); return softplus(inputs[0]);
    case OpKind::exp: need(1); return exp(inputs[0]);
    case OpKind::log: need(1); return log(inputs[0]);
    case OpKind::square: need(1); return square(inputs[0]);
    case OpKind::sum: need(1); return sum(inputs[0]);
    case OpKind::mean: need(1); return mean(inputs[0]);
    case OpKind::row_sum: need(1); return row_sum(inputs[0]);
    case OpKind::concat: return concat(inputs);
    case OpKind::slice: need(1); return slice(inputs[0], attrs.begin, attrs.end);
    case OpKind::scale: need(1); return scale(inputs[0], attrs.a);
    case OpKind::shift: need(1); return shift(inputs[0], attrs.a);
    case OpKind::clip: need(1); return clip(inputs[0], attrs.a, attrs.b);
    case OpKind::leaf: break;
  }
  fail(ErrorKind::contract, "apply_op cannot create leaves");
}

// --- gradient checking ----------------------------------------------------

GradCheckReport grad_check(const ScalarFunction& function, const ParamSet& params, double fd_step,
                           double tol, std::size_t max_entries, std::uint64_t subset_seed) {
  if (!(fd_step > 0.0)) fail(ErrorKind::contract, "grad_check needs fd_step > 0");

  auto evaluate = [&](const ParamSet& p) {
    Tape tape;
    const double v = function(tape, p).value().item();
    if (!std::isfinite(v)) fail(ErrorKind::domain, "grad_check: non-finite function value");
    return v;
  };

  GradMap analytic;
  {
    Tape tape;
    Var out = function(tape, params);
    if (!std::isfinite(out.value().item()))
      fail(ErrorKind::domain, "grad_check: non-finite function value");
    analytic = tape.backward(out);
  }

  std::vector<std::pair<const std::string*, std::size_t>> entries;
  for (const auto& [name, t] : params)
    for (std::size_t i = 0; i < t.size(); ++i) entries.emplace_back(&name, i);
  if (max_entries > 0 && max_entries < entries.size()) {
    Rng rng(subset_seed);
    for (std::size_t i = 0; i < max_entries; ++i)
      std::swap(entries[i], entries[i + uniform_index(rng, entries.size() - i)]);
    entries.resize(max_entries);
  }

  GradCheckReport report;
  ParamSet probe = params;
  for (const auto& [name_ptr, index] : entries) {
    const std::string& name = *name_ptr;
    double& slot = probe.at(name)[index];
    const double original = slot;
    slot = original + fd_step;
    const double plus = evaluate(probe);
    slot = original - fd_step;
    const double minus = evaluate(probe);
    slot = original;

    const double fd = (plus - minus) / (2.0 * fd_step);
    auto it = analytic.find(name);
    const double ad = it == analytic.end() ? 0.0 : it->second[index];
    const double denom = std::max({std::abs(ad), std::abs(fd), 1e-8});
    const double rel = std::abs(ad - fd) / denom;
    ++report.checked;
    if (rel > report.max_rel_error || report.worst_param.empty()) {
      report.max_rel_error = rel;
      report.worst_param = name;
      report.worst_index = index;
    }
  }
  report.pass = report.max_rel_error <= tol;
  return report;
}

// --- optimisation ---------------------------------------------------------

AdamState make_adam(const ParamSet& params, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  for (const auto& [name, t] : params) {
    state.first_moment.emplace(name, Tensor(t.shape()));
    state.second_moment.emplace(name, Tensor(t.shape()));
  }
  return state;
}

void adam_step(ParamSet& params, const GradMap& grads, AdamState& state) {
  for (const auto& [name, p] : params) {
    auto g = grads.find(name);
    if (g == grads.end()) fail(ErrorKind::contract, "missing gradient for parameter '" + name + "'");
    if (g->second.shape() != p.shape())
      fail(ErrorKind::dimension, "gradient for '" + name + "' has shape " +
                                     shape_string(g->second.shape()) + ", parameter has " +
                                     shape_string(p.shape()));
  }
  state.step += 1;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (auto& [name, p] : params) {
    const Tensor& g = grads.at(name);
    auto m_it = state.first_moment.try_emplace(name, p.shape()).first;
    auto v_it = state.second_moment.try_emplace(name, p.shape()).first;
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

// --- networks -------------------------------------------------------------

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w({fan_in, fan_out});
  for (double& x : w.data()) x = uniform(rng, -bound, bound);
  return w;
}

Mlp::Mlp(std::string prefix, std::size_t in, std::vector<std::size_t> hidden, std::size_t out,
         Activation activation)
    : prefix_(std::move(prefix)), activation_(activation) {
  sizes_.clear();
  sizes_.push_back(in);
  sizes_.insert(sizes_.end(), hidden.begin(), hidden.end());
  sizes_.push_back(out);
  for (auto s : sizes_)
    if (s == 0) fail(ErrorKind::dimension, "network '" + prefix_ + "' has a zero-width layer");
}

std::vector<std::string> Mlp::param_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    names.push_back(prefix_ + ".layer" + std::to_string(i) + ".weight");
    names.push_back(prefix_ + ".layer" + std::to_string(i) + ".bias");
  }
  return names;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) n += sizes_[i] * sizes_[i + 1] + sizes_[i + 1];
  return n;
}

void Mlp::init(ParamSet& params, Rng& rng) const {
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    const std::string layer = prefix_ + ".layer" + std::to_string(i);
    params.insert_or_assign(layer + ".weight", glorot_uniform(sizes_[i], sizes_[i + 1], rng));
    params.insert_or_assign(layer + ".bias", Tensor({sizes_[i + 1]}));
  }
}

Var Mlp::forward(Tape& tape, const ParamSet& params, Var x) const {
  if (x.value().rank() != 2 || x.value().cols() != in_dim())
    fail(ErrorKind::dimension, "network '" + prefix_ + "' expects [B," + std::to_string(in_dim()) +
                                   "] input, got " + shape_string(x.value().shape()));
  Var h = x;
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t i = 0; i < layers; ++i) {
    const std::string layer = prefix_ + ".layer" + std::to_string(i);
    h = linear(h, tape.param(params, layer + ".weight"), tape.param(params, layer + ".bias"));
    if (i + 1 < layers) h = activation_ == Activation::tanh ? tanh(h) : relu(h);
  }
  return h;
}

ParamSet select_prefix(const ParamSet& params, const std::string& prefix) {
  ParamSet out;
  for (const auto& [name, t] : params)
    if (name.compare(0, prefix.size(), prefix) == 0) out.emplace(name, t);
  return out;
}

}  // namespace noda
