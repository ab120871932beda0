#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "rgan/tensor.hpp"

// Reverse-mode differentiation over a linear record of tensor ops.
//
// A Tape owns every value produced while building an expression; a Var is a
// handle into it. Nodes are appended in evaluation order, so parents always
// precede children and backward() can sweep the record once in reverse.
// Gradients are accumulated in that fixed reverse order, which makes the
// result bit-reproducible. The tape is single-threaded.
namespace rgan::ad {

using NodeId = std::size_t;

class Tape;

struct Var {
  Tape* tape = nullptr;
  NodeId id = 0;

  const Tensor& value() const;
};

/// Numerical floor applied inside log(): log(u) = log(max(u, kLogFloor)).
inline constexpr double kLogFloor = 1e-12;
inline constexpr double kDefaultLeakySlope = 0.2;

class Gradients {
 public:
  /// Gradient of the root w.r.t. `v`. Differentiable nodes the root does not
  /// reach report zeros; asking for a constant is a ContractError.
  const Tensor& of(Var v) const;
  bool reached(Var v) const;

 private:
  friend class Tape;
  const Tape* tape_ = nullptr;
  std::vector<std::optional<Tensor>> grads_;
  mutable std::vector<std::optional<Tensor>> zeros_;
};

/// Accumulates parent contributions during the reverse sweep.
class GradientSink {
 public:
  GradientSink(const Tape& tape, std::vector<std::optional<Tensor>>& grads) : tape_(tape), grads_(grads) {}
  bool wants(NodeId id) const;
  void add(NodeId id, Tensor&& contribution);

 private:
  const Tape& tape_;
  std::vector<std::optional<Tensor>>& grads_;
};

class Tape {
 public:
  using BackwardFn = std::function<void(const Tape&, NodeId self, const Tensor& grad, GradientSink&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input.
  Var leaf(Tensor value);
  /// Input treated as a constant; never receives a gradient.
  Var constant(Tensor value);

  /// Appends an op result. The node is differentiable iff any parent is.
  Var record(Tensor value, std::vector<NodeId> parents, BackwardFn backward);

  const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
  bool requires_grad(NodeId id) const { return nodes_.at(id).requires_grad; }
  const std::vector<NodeId>& parents(NodeId id) const { return nodes_.at(id).parents; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Reverse accumulation from a single-element root.
  Gradients backward(Var root) const;

 private:
  struct Node {
    Tensor value;
    std::vector<NodeId> parents;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::deque<Node> nodes_;
};

// Linear algebra.
Var matmul(Var a, Var b);
/// Adds a length-n bias vector to every row of an m x n matrix.
Var add_bias(Var a, Var bias);

// Element-wise binary ops on equal shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

// Element-wise unary ops.
Var relu(Var a);
Var leaky_relu(Var a, double slope = kDefaultLeakySlope);
Var tanh(Var a);
Var sigmoid(Var a);
Var log(Var a);
Var exp(Var a);
Var neg(Var a);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);

enum class Unary { relu, leaky_relu, tanh, sigmoid, log, exp, neg };
Var apply(Unary kind, Var a);

// Reductions over all entries (scalar result) or per row of a matrix
// (vector result).
enum class Axis { all, per_row };
Var sum(Var a, Axis axis = Axis::all);
Var mean(Var a, Axis axis = Axis::all);
Var l2_norm_sq(Var a, Axis axis = Axis::all);

// Plain kernels shared with tape-free code paths.
namespace kernel {
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
double sigmoid(double x);
/// log(max(u, kLogFloor)); negative u is a DomainError.
double log_floored(double u);
}  // namespace kernel

}  // namespace rgan::ad
