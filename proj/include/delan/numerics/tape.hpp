#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "delan/numerics/matrix.hpp"

namespace delan::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order and
/// gradients are propagated in reverse order by `backward`.
class Tape {
 public:
  /// Receives the node's accumulated output gradient and its forward value.
  using Backward = std::function<void(Tape&, const Matrix& grad_out, const Matrix& value)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var leaf(Matrix value);
  /// Records an op result. `backward` is dropped when no input needs a gradient.
  Var record(Matrix value, bool requires_grad, Backward backward);

  const Matrix& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  /// Accumulated gradient, or an empty matrix when none reached the node.
  const Matrix& grad(Var v) const { return nodes_[v.id()].grad; }
  Matrix grad_or_zero(Var v) const;

  /// Adds `g` into the gradient of `v`; no-op for nodes without requires_grad.
  void accumulate(Var v, const Matrix& g);

  /// Seeds d(root)/d(root) = 1 on a 1x1 root and propagates.
  void backward(Var root);
  /// Propagates gradients already seeded with `accumulate`.
  void propagate();

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::deque<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }
inline bool Var::requires_grad() const { return tape_->requires_grad(*this); }

// Differentiable ops. All inputs must live on the same tape.

Var matmul(Var a, Var b);
/// a * b^T
Var matmul_bt(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
/// Adds a 1xC row to every row of a.
Var add_row(Var a, Var row);
Var relu(Var a);
Var gelu(Var a);
Var tanh(Var a);
/// Row-wise layer normalisation with learned gain/bias rows (1xC).
Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5);
/// Row-wise softmax. `allowed` (rows x cols, may be empty for "all") marks
/// the admissible entries; rows without support throw.
Var softmax_rows(Var a, std::span<const std::uint8_t> allowed = {});
/// Row-wise log-softmax over all entries.
Var log_softmax_rows(Var a);
Var gather_rows(Var table, std::span<const int> indices);
/// Row g of the result is the sum of table rows listed in groups[g].
Var bag_rows(Var table, const std::vector<std::vector<int>>& groups);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
/// 1xC mean of the rows flagged in `mask` (all rows when empty).
Var mean_rows(Var a, const Mask& mask = {});
Var sum(Var a);
Var element(Var a, std::size_t r, std::size_t c);
/// rows x cols matrix assembled from 1x1 nodes in row-major order.
Var stack_scalars(std::span<const Var> scalars, std::size_t rows, std::size_t cols);
/// Each row scaled to unit L2 norm.
Var normalize_rows(Var a, double eps = 1e-12);
/// Inverted dropout; identity when p == 0.
Var dropout(Var a, double p, std::mt19937_64& rng);

}  // namespace delan::ad
