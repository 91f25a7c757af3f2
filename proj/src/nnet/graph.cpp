#include "metadiv/nnet/graph.hpp"

#include "metadiv/error.hpp"

#include <cmath>
#include <string>

namespace metadiv::nnet {
namespace {

Matrix row_softmax(const Matrix& z) {
  Matrix p = z.colwise() - z.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  const Vector sums = p.rowwise().sum();
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= sums(i);
  return p;
}

void require_shape(bool ok, const char* op) {
  if (!ok) throw InvalidInput(std::string("graph: shape mismatch in ") + op);
}

}  // namespace

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Graph::leaf(Matrix value, bool requires_grad) {
  Node n;
  n.op = Op::leaf;
  n.requires_grad = requires_grad;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::detach(Var v) { return constant(value(v)); }

Var Graph::matmul(Var a, Var b) {
  const auto& x = value(a);
  const auto& y = value(b);
  require_shape(x.cols() == y.rows(), "matmul");
  Node n;
  n.op = Op::matmul;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = requires_grad(a) || requires_grad(b);
  n.value.noalias() = x * y;
  return push(std::move(n));
}

Var Graph::matmul_tn(Var a, Var b) {
  const auto& x = value(a);
  const auto& y = value(b);
  require_shape(x.rows() == y.rows(), "matmul_tn");
  Node n;
  n.op = Op::matmul_tn;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = requires_grad(a) || requires_grad(b);
  n.value.noalias() = x.transpose() * y;
  return push(std::move(n));
}

Var Graph::matmul_nt(Var a, Var b) {
  const auto& x = value(a);
  const auto& y = value(b);
  require_shape(x.cols() == y.cols(), "matmul_nt");
  Node n;
  n.op = Op::matmul_nt;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = requires_grad(a) || requires_grad(b);
  n.value.noalias() = x * y.transpose();
  return push(std::move(n));
}

Var Graph::add(Var a, Var b) {
  require_shape(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "add");
  Node n;
  n.op = Op::add;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = requires_grad(a) || requires_grad(b);
  n.value = value(a) + value(b);
  return push(std::move(n));
}

Var Graph::sub(Var a, Var b) {
  require_shape(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "sub");
  Node n;
  n.op = Op::sub;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = requires_grad(a) || requires_grad(b);
  n.value = value(a) - value(b);
  return push(std::move(n));
}

Var Graph::add_row(Var a, Var row) {
  require_shape(value(row).rows() == 1 && value(row).cols() == value(a).cols(), "add_row");
  Node n;
  n.op = Op::add_row;
  n.a = a.id;
  n.b = row.id;
  n.requires_grad = requires_grad(a) || requires_grad(row);
  n.value = value(a).rowwise() + value(row).row(0);
  return push(std::move(n));
}

Var Graph::col_sum(Var a) {
  Node n;
  n.op = Op::col_sum;
  n.a = a.id;
  n.requires_grad = requires_grad(a);
  n.value = value(a).colwise().sum();
  return push(std::move(n));
}

Var Graph::relu(Var a) {
  Node n;
  n.op = Op::relu;
  n.a = a.id;
  n.requires_grad = requires_grad(a);
  n.value = value(a).cwiseMax(0.0);
  return push(std::move(n));
}

Var Graph::relu_mask(Var a) {
  return constant((value(a).array() > 0.0).cast<double>().matrix());
}

Var Graph::hadamard(Var a, Var b) {
  require_shape(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(),
                "hadamard");
  Node n;
  n.op = Op::hadamard;
  n.a = a.id;
  n.b = b.id;
  n.requires_grad = requires_grad(a) || requires_grad(b);
  n.value = value(a).cwiseProduct(value(b));
  return push(std::move(n));
}

Var Graph::scale(Var a, double s) {
  Node n;
  n.op = Op::scale;
  n.a = a.id;
  n.scalar = s;
  n.requires_grad = requires_grad(a);
  n.value = s * value(a);
  return push(std::move(n));
}

Var Graph::softmax(Var a) {
  Node n;
  n.op = Op::softmax;
  n.a = a.id;
  n.requires_grad = requires_grad(a);
  n.value = row_softmax(value(a));
  return push(std::move(n));
}

Var Graph::softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const auto& z = value(logits);
  require_shape(static_cast<std::size_t>(z.rows()) == labels.size() && z.rows() > 0,
                "softmax_cross_entropy");
  Node n;
  n.op = Op::softmax_xent;
  n.a = logits.id;
  n.requires_grad = requires_grad(logits);
  Matrix p = row_softmax(z);
  const Vector row_max = z.rowwise().maxCoeff();
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= z.cols()) throw InvalidInput("softmax_cross_entropy: label out of range");
    const double lse = row_max(i) + std::log((z.row(i).array() - row_max(i)).exp().sum());
    total += lse - z(i, y);
    p(i, y) -= 1.0;
  }
  const double batch = static_cast<double>(z.rows());
  n.value = Matrix::Constant(1, 1, total / batch);
  n.aux = p / batch;
  return push(std::move(n));
}

Var Graph::sum_all(Var a) {
  Node n;
  n.op = Op::sum_all;
  n.a = a.id;
  n.requires_grad = requires_grad(a);
  n.value = Matrix::Constant(1, 1, value(a).sum());
  return push(std::move(n));
}

void Graph::accumulate(std::size_t id, const Matrix& delta) { accumulate_expr(id, delta); }

template <class Expr>
void Graph::accumulate_expr(std::size_t id, const Expr& delta) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.has_adjoint) {
    n.adjoint += delta;
  } else {
    n.adjoint = delta;
    n.has_adjoint = true;
  }
}

void Graph::backward(Var root) {
  if (value(root).rows() != 1 || value(root).cols() != 1) {
    throw InvalidInput("graph: backward root must be 1x1");
  }
  for (auto& n : nodes_) {
    n.has_adjoint = false;
    n.adjoint.resize(0, 0);
  }
  if (!requires_grad(root)) return;
  accumulate(root.id, Matrix::Ones(1, 1));

  for (std::size_t id = root.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_adjoint || n.op == Op::leaf) continue;
    const Matrix& g = n.adjoint;
    const std::size_t a = n.a;
    const std::size_t b = n.b;
    const bool ga = nodes_[a].requires_grad;
    const bool gb = nodes_[b].requires_grad;
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::matmul:
        if (ga) accumulate_expr(a, g * nodes_[b].value.transpose());
        if (gb) accumulate_expr(b, nodes_[a].value.transpose() * g);
        break;
      case Op::matmul_tn:
        if (ga) accumulate_expr(a, nodes_[b].value * g.transpose());
        if (gb) accumulate_expr(b, nodes_[a].value * g);
        break;
      case Op::matmul_nt:
        if (ga) accumulate_expr(a, g * nodes_[b].value);
        if (gb) accumulate_expr(b, g.transpose() * nodes_[a].value);
        break;
      case Op::add:
        if (ga) accumulate(a, g);
        if (gb) accumulate(b, g);
        break;
      case Op::sub:
        if (ga) accumulate(a, g);
        if (gb) accumulate_expr(b, -g);
        break;
      case Op::add_row:
        if (ga) accumulate(a, g);
        if (gb) accumulate_expr(b, g.colwise().sum());
        break;
      case Op::col_sum:
        if (ga) accumulate_expr(a, g.replicate(nodes_[a].value.rows(), 1));
        break;
      case Op::relu:
        if (ga) {
          accumulate_expr(a, (nodes_[a].value.array() > 0.0).select(g, 0.0));
        }
        break;
      case Op::hadamard:
        if (ga) accumulate_expr(a, g.cwiseProduct(nodes_[b].value));
        if (gb) accumulate_expr(b, g.cwiseProduct(nodes_[a].value));
        break;
      case Op::scale:
        if (ga) accumulate_expr(a, n.scalar * g);
        break;
      case Op::softmax:
        if (ga) {
          const Matrix& y = n.value;
          const Vector inner = g.cwiseProduct(y).rowwise().sum();
          accumulate_expr(a, y.cwiseProduct(g - inner.replicate(1, g.cols())));
        }
        break;
      case Op::softmax_xent:
        if (ga) accumulate_expr(a, g(0, 0) * n.aux);
        break;
      case Op::sum_all:
        if (ga) {
          accumulate_expr(a, Matrix::Constant(nodes_[a].value.rows(), nodes_[a].value.cols(), g(0, 0)));
        }
        break;
    }
  }
}

Matrix Graph::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.has_adjoint) return n.adjoint;
  return Matrix::Zero(n.value.rows(), n.value.cols());
}

}  // namespace metadiv::nnet
