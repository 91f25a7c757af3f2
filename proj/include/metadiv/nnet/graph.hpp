#pragma once

#include "metadiv/numerics/matrix.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace metadiv::nnet {

/// Handle to a node on a Graph.
struct Var {
  std::size_t id = 0;
};

/// Append-only tape of dense matrix operations with a single reverse sweep.
///
/// Every op records its value eagerly. Nodes that depend on no gradient
/// requiring leaf are treated as constants and skipped by the reverse pass.
/// Gradients of gradients are obtained by expressing the inner gradient itself
/// with tape ops (see analytic_gradient), never by recording the reverse pass.
class Graph {
 public:
  Var leaf(Matrix value, bool requires_grad = true);
  Var constant(Matrix value) { return leaf(std::move(value), false); }
  /// Constant copy of `v`'s current value.
  Var detach(Var v);

  Var matmul(Var a, Var b);     // a * b
  Var matmul_tn(Var a, Var b);  // a^T * b
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var add_row(Var a, Var row);  // a + 1 * row, row is 1 x cols
  Var col_sum(Var a);           // 1 x cols
  Var relu(Var a);
  /// Constant 0/1 mask of a > 0 (ReLU derivative with 0 at the kink).
  Var relu_mask(Var a);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double s);
  Var softmax(Var a);           // row-wise
  /// Mean cross-entropy of row-wise softmax(logits) against labels, 1 x 1.
  Var softmax_cross_entropy(Var logits, std::span<const int> labels);
  Var sum_all(Var a);           // 1 x 1

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Reverse sweep from a 1 x 1 node. Adjoints from an earlier sweep are
  /// cleared first.
  void backward(Var root);

  /// Adjoint of `v` after backward (zeros when `v` did not influence root).
  Matrix grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  enum class Op {
    leaf, matmul, matmul_tn, matmul_nt, add, sub, add_row, col_sum, relu,
    hadamard, scale, softmax, softmax_xent, sum_all,
  };

  struct Node {
    Op op = Op::leaf;
    std::size_t a = 0;
    std::size_t b = 0;
    double scalar = 0.0;
    bool requires_grad = false;
    bool has_adjoint = false;
    Matrix value;
    Matrix adjoint;
    Matrix aux;  // softmax probabilities or one-hot labels
  };

  Var push(Node node);
  void accumulate(std::size_t id, const Matrix& delta);
  template <class Expr>
  void accumulate_expr(std::size_t id, const Expr& delta);

  std::vector<Node> nodes_;
};

}  // namespace metadiv::nnet
