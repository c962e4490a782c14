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
#pragma once

// Reverse-mode automatic differentiation over dense row-major tensors.
//
// A Tape records every operation applied to its Vars together with the rule
// needed to push gradients back through it. Tapes are built fresh for each
// training step and cleared by backward(). Parameters live outside the tape in
// a ParamSet and are registered on first use, so a network evaluated many
// times on one tape (e.g. inside an unrolled integrator) accumulates a single
// gradient per parameter.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "noda/random.hpp"

namespace noda {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

class Tensor {
 public:
  // Rank-0 tensor holding 0.
  Tensor();
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  // Rank-2 view: rank 1 is a single row, rank 0 is 1x1.
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

  double item() const;
  bool all_finite() const noexcept;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Bit-level equality, so -0.0 != 0.0 and identical NaN payloads compare equal.
bool bit_equal(const Tensor& a, const Tensor& b);

// Lexicographically ordered by name.
using ParamSet = std::map<std::string, Tensor>;
using GradMap = std::map<std::string, Tensor>;

std::size_t parameter_count(const ParamSet& params);

enum class OpKind {
  leaf,
  add,
  sub,
  mul,
  matmul,
  linear,
  tanh,
  relu,
  softplus,
  exp,
  log,
  square,
  sum,
  mean,
  row_sum,
  concat,
  slice,
  scale,
  shift,
  clip,
  minimum,
};

const char* to_string(OpKind kind);

class Tape;

// Handle to a node on a tape. Cheap to copy; valid until the tape is cleared.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape* tape() const noexcept { return tape_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

// Scalar attributes used by some operations.
struct OpAttrs {
  double a = 0.0;  // scale factor, shift, clip low
  double b = 0.0;  // clip high
  std::size_t begin = 0;  // slice
  std::size_t end = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that never receives a gradient.
  Var constant(Tensor value);
  // Named trainable leaf; its gradient appears in backward()'s result.
  Var variable(const std::string& name, Tensor value);
  // Registers params[name] on first use and returns the cached node afterwards.
  Var param(const ParamSet& params, const std::string& name);

  const Tensor& value(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  void clear();

  // Gradients of a scalar output with respect to every named leaf reachable
  // on the tape. Clears the tape afterwards.
  GradMap backward(Var output);

  // Used by the operation implementations.
  Var record(OpKind kind, Tensor value, std::initializer_list<Var> inputs, OpAttrs attrs = {});
  Var record(OpKind kind, Tensor value, std::span<const Var> inputs, OpAttrs attrs = {});

 private:
  struct Node {
    OpKind kind = OpKind::leaf;
    Tensor value;
    std::vector<double> grad;
    std::vector<std::uint32_t> inputs;
    OpAttrs attrs;
    std::string name;
    bool requires_grad = false;
  };

  Var push(Node node);
  void propagate(std::uint32_t id);
  std::vector<double>& grad_of(std::uint32_t id);

  std::vector<Node> nodes_;
  std::unordered_map<std::string, std::uint32_t> named_;
};

// --- operations -----------------------------------------------------------
// Binary elementwise ops accept equal shapes, or a rank-2 left operand with a
// rank-1 (or single-row) right operand that is broadcast over rows.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var minimum(Var a, Var b);
Var matmul(Var a, Var b);
// x W + b with x [B, in], W [in, out], b [out].
Var linear(Var x, Var weight, Var bias);
Var tanh(Var a);
Var relu(Var a);
Var softplus(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var sum(Var a);
Var mean(Var a);
// [B, n] -> [B, 1]
Var row_sum(Var a);
// Column-wise concatenation of rank-2 tensors with equal row counts.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
// Columns [begin, end) of a rank-2 tensor.
Var slice(Var a, std::size_t begin, std::size_t end);
Var scale(Var a, double factor);
Var shift(Var a, double offset);
Var clip(Var a, double lo, double hi);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double c, Var a) { return scale(a, c); }

// Generic entry point over the op set above.
Var apply_op(OpKind kind, std::span<const Var> inputs, const OpAttrs& attrs = {});

// --- gradient checking ----------------------------------------------------

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool pass = true;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

using ScalarFunction = std::function<Var(Tape&, const ParamSet&)>;

// Compares backward() against central differences. Relative error per entry
// uses max(|g_ad|, |g_fd|, 1e-8) as denominator. With max_entries > 0 only a
// seeded random subset of entries is probed.
GradCheckReport grad_check(const ScalarFunction& function, const ParamSet& params, double fd_step,
                           double tol, std::size_t max_entries = 0, std::uint64_t subset_seed = 0);

// --- optimisation ---------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  ParamSet first_moment;
  ParamSet second_moment;
  std::uint64_t step = 0;
};

AdamState make_adam(const ParamSet& params, const AdamConfig& config = {});

// One bias-corrected Adam update of every parameter in `params`.
void adam_step(ParamSet& params, const GradMap& grads, AdamState& state);

// --- networks -------------------------------------------------------------

enum class Activation { tanh, relu };

// Uniform on +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Fully connected network; parameters are named "<prefix>.layer<i>.weight"
// and "<prefix>.layer<i>.bias". The output layer is linear.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string prefix, std::size_t in, std::vector<std::size_t> hidden, std::size_t out,
      Activation activation = Activation::tanh);

  void init(ParamSet& params, Rng& rng) const;
  Var forward(Tape& tape, const ParamSet& params, Var x) const;

  const std::string& prefix() const noexcept { return prefix_; }
  std::size_t in_dim() const noexcept { return sizes_.front(); }
  std::size_t out_dim() const noexcept { return sizes_.back(); }
  std::size_t param_count() const;
  std::vector<std::string> param_names() const;

 private:
  std::string prefix_;
  std::vector<std::size_t> sizes_{0, 0};
  Activation activation_ = Activation::tanh;
};

// Copies every parameter whose name starts with `prefix`.
ParamSet select_prefix(const ParamSet& params, const std::string& prefix);

}  // namespace noda
