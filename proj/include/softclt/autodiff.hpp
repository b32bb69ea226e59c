#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "softclt/tensor.hpp"

namespace softclt {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  explicit operator bool() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records operations in creation order; creation order is a topological order,
// so backward() walks the node list once from the root down. A tape is
// single-threaded; independent tapes may run concurrently.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value) { return push(std::move(value), false, {}); }
  Var param(Tensor value) { return push(std::move(value), true, {}); }

  // Record an op output. `backward` is dropped when no parent needs a gradient;
  // otherwise it receives the tape and the id of this node and must add into
  // the parents' grad buffers.
  Var record(Tensor value, std::span<const Var> parents, Backward backward);

  // Populate gradients of every node reachable from the scalar `root`.
  void backward(Var root);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const;
  Tensor& grad_buffer(std::size_t id);
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };

  Var push(Tensor value, bool requires_grad, Backward backward);

  std::deque<Node> nodes_;
  Tensor empty_;
};

namespace ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var matmul(Var a, Var b);  // [n, k] x [k, m]
Var dot(Var a, Var b);     // rank-1 inner product
Var relu(Var a);
Var gelu(Var a);           // exact erf form
Var exp(Var a);
Var log(Var a);            // throws NumericError on nonpositive input
Var sum(Var a);
Var mean(Var a);
Var softmax_rows(Var a);   // softmax over the last axis of a rank-2 tensor
Var reshape(Var a, Shape shape);
Var transpose01(Var a);    // swap the two leading axes (rank 2 or 3)
Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t start, std::size_t length);

// Same-length dilated convolution over [B, L, C_in] with kernel [K, C_in, C_out]
// (K odd) and bias [C_out]; zero padding of dilation*(K-1)/2 on both sides.
Var conv1d(Var x, Var kernel, Var bias, std::size_t dilation = 1);

// Max pooling with kernel = stride = m along the time axis (axis 0 of rank-1
// tensors, axis rank-2 otherwise). Output length is ceil(L / m); a partial last
// window is pooled as is. Ties route the gradient to the first index.
Var max_pool1d(Var x, std::size_t m);

}  // namespace ad
}  // namespace softclt
