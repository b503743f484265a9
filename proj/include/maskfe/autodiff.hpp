#pragma once

// Reverse-mode differentiation over dense tensors.
//
// A Tape records every operation in creation order. Because parents are
// always created before their consumers, walking the tape backwards visits
// each node after all of its consumers, so a single reverse sweep suffices.
//
// Shapes accepted by the elementwise binary ops must match exactly; use
// broadcast_rows / broadcast_cols to expand vectors explicitly.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "maskfe/tensor.hpp"

namespace maskfe::ad {

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Gradient accumulators indexed by node id. Nodes the sweep never reached
/// report a zero tensor of their own shape.
class Gradients {
 public:
  Gradients(const Tape& tape, std::vector<Tensor> grads);

  Tensor operator[](Var v) const;
  bool reached(Var v) const;

 private:
  const Tape* tape_;
  std::vector<Tensor> grads_;
};

// Called with the upstream gradient of the node. It must add its
// contribution to each parent via GradSink::accumulate.
class GradSink;
using BackwardRule = std::function<void(const Tensor& upstream, GradSink& sink)>;

class GradSink {
 public:
  // Adds `g` (same shape as the parent value) into the parent's gradient.
  void accumulate(std::size_t parent, const Tensor& g);
  // Returns the parent's gradient buffer (zero-initialized on first use) for
  // in-place accumulation. Returns nullptr when the parent needs no gradient.
  Tensor* buffer(std::size_t parent);

 private:
  friend class Tape;
  GradSink(const Tape& tape, std::vector<Tensor>& grads) : tape_(tape), grads_(grads) {}
  const Tape& tape_;
  std::vector<Tensor>& grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that receives a gradient.
  Var parameter(Tensor value);
  // Leaf without gradient.
  Var constant(Tensor value);

  // Records an interior node. `rule` may be empty when no parent needs
  // gradients.
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardRule rule);

  /// Reverse sweep from a scalar loss. Does not mutate the tape, so repeated
  /// calls give identical results. Only leaves and the loss keep their
  /// gradients; interior buffers are released once propagated.
  Gradients backward(Var loss) const;

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> parents;
    BackwardRule rule;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

// ---- elementwise ----------------------------------------------------------
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
// base^exponent for positive base, same shapes.
Var pow(Var base, Var exponent);
Var pow(Var base, double exponent);
Var neg(Var a);
Var scale(Var a, double factor);
Var add_scalar(Var a, double c);
Var exp(Var a);
Var log(Var a);
Var abs(Var a);
Var sqrt(Var a);
Var square(Var a);
Var sigmoid(Var a);
Var softplus(Var a);
Var relu(Var a);

// ---- broadcasting ---------------------------------------------------------
// (m) or (1,m) -> (rows,m)
Var broadcast_rows(Var v, std::size_t rows);
// (n) or (n,1) -> (n,cols)
Var broadcast_cols(Var v, std::size_t cols);
Var reshape(Var a, Shape shape);

// ---- linear algebra and reductions ---------------------------------------
Var matmul(Var a, Var b);
Var sum(Var a);
Var mean(Var a);
// Reduce a matrix along `axis` (0: over rows, 1: over columns). Result is a
// vector.
Var sum_axis(Var a, std::size_t axis);
Var mean_axis(Var a, std::size_t axis);
Var prod_axis(Var a, std::size_t axis);

// Softmax along the last axis of a vector or matrix. Max-shifted.
Var softmax(Var a);
Var log_softmax(Var a);

// ---- structural -----------------------------------------------------------
// Concatenate vectors (axis 0) or matrices (axis 1 joins columns).
Var concat(std::span<const Var> parts, std::size_t axis);
// Select vector elements by constant indices.
Var gather(Var v, std::span<const std::size_t> indices);
// Select matrix columns by constant indices.
Var gather_cols(Var m, std::span<const std::size_t> indices);
// Columns [begin, end) of a matrix.
Var slice_cols(Var m, std::size_t begin, std::size_t end);

}  // namespace maskfe::ad
