#include "metadiv/nnet/logistic_head.hpp"

#include "metadiv/error.hpp"
#include "metadiv/nnet/mlp.hpp"
#include "metadiv/numerics/linalg.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <string>

namespace metadiv::nnet {
namespace {

// Relative objective change treated as rounding noise in the line search.
constexpr double kObjectiveNoise = 1e-10;

/// The regularizer makes the optimal weights lie in the row space of the
/// features, so with X = U S V^T we optimize W = V B over the reduced
/// features F = U S. `theta` stacks B (r x n) over the bias row.
struct Reduced {
  Matrix f;  // N x (r + 1), last column ones
  Matrix y;  // one-hot
  double c;
  Eigen::Index r;

  Matrix logits(const Matrix& theta) const { return f * theta; }

  double objective(const Matrix& theta, const Matrix& z) const {
    double ce = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double m = z.row(i).maxCoeff();
      const double lse = m + std::log((z.row(i).array() - m).exp().sum());
      ce += lse - z.row(i).dot(y.row(i));
    }
    return 0.5 * theta.topRows(r).squaredNorm() + c * ce;
  }

  Matrix gradient(const Matrix& theta, const Matrix& probs) const {
    Matrix g = c * (f.transpose() * (probs - y));
    g.topRows(r) += theta.topRows(r);
    return g;
  }

  /// Dense Hessian over vec(theta) (column-major). The softmax is invariant to
  /// a common bias shift, so 1 1^T is added on the bias block; the gradient is
  /// orthogonal to that direction and the step on the rest is unchanged.
  Matrix hessian(const Matrix& probs) const {
    const Eigen::Index p = f.cols();
    const Eigen::Index n = probs.cols();
    Matrix h = Matrix::Zero(p * n, p * n);
    for (Eigen::Index k = 0; k < n; ++k) {
      for (Eigen::Index l = k; l < n; ++l) {
        Vector w = -probs.col(k).cwiseProduct(probs.col(l));
        if (k == l) w += probs.col(k);
        const Matrix block = c * (f.transpose() * w.asDiagonal() * f);
        h.block(k * p, l * p, p, p) = block;
        if (l != k) h.block(l * p, k * p, p, p) = block.transpose();
      }
      h.block(k * p, k * p, r, r).diagonal().array() += 1.0;
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      for (Eigen::Index l = 0; l < n; ++l) h(k * p + r, l * p + r) += 1.0;
    }
    return h;
  }
};

Matrix newton_step(const Matrix& hessian, const Matrix& grad) {
  const Vector g = Eigen::Map<const Vector>(grad.data(), grad.size());
  Vector step;
  Eigen::LLT<Matrix> llt(hessian);
  if (llt.info() == Eigen::Success) {
    step = -llt.solve(g);
  } else {
    step = -Eigen::LDLT<Matrix>(hessian).solve(g);
  }
  return Eigen::Map<const Matrix>(step.data(), grad.rows(), grad.cols());
}

}  // namespace

double logistic_objective(const LogisticHead& head, const Matrix& features,
                          std::span<const int> labels, double c_reg) {
  const Matrix z = head_logits(head, features);
  return 0.5 * head.weights.squaredNorm() +
         c_reg * cross_entropy(z, labels) * static_cast<double>(labels.size());
}

Matrix head_logits(const LogisticHead& head, const Matrix& features) {
  Matrix z = features * head.weights;
  z.rowwise() += head.bias;
  return z;
}

LogisticFit fit_logistic_head(const Matrix& features, std::span<const int> labels,
                              std::size_t n_classes, const LogisticOptions& options) {
  numerics::require_finite(features, "fit_logistic_head features");
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw InvalidInput("fit_logistic_head: label count mismatch");
  }
  if (n_classes < 2 || labels.size() < n_classes) {
    throw InvalidInput("fit_logistic_head: need n_classes >= 2 and at least n_classes examples");
  }
  if (!(options.c_reg > 0.0) || !(options.tol > 0.0)) {
    throw InvalidInput("fit_logistic_head: c_reg and tol must be positive");
  }
  const auto n = static_cast<Eigen::Index>(n_classes);
  const Eigen::Index rows = features.rows();
  const Eigen::Index dim = features.cols();

  const numerics::SvdResult svd = numerics::svd(features);
  const Eigen::Index r = svd.singular_values.size();
  Reduced pb;
  pb.r = r;
  pb.c = options.c_reg;
  pb.f.resize(rows, r + 1);
  pb.f.leftCols(r) = svd.u * svd.singular_values.asDiagonal();
  pb.f.col(r).setOnes();
  pb.y = Matrix::Zero(rows, n);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n) throw InvalidInput("fit_logistic_head: label out of range");
    pb.y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }

  Matrix theta = Matrix::Zero(r + 1, n);
  Matrix z = pb.logits(theta);
  double f = pb.objective(theta, z);
  Matrix probs = softmax_rows(z);
  Matrix grad = pb.gradient(theta, probs);
  double gnorm = grad.norm();
  std::size_t it = 0;
  for (; gnorm > options.tol && it < options.max_iter; ++it) {
    const Matrix step = newton_step(pb.hessian(probs), grad);
    const double slope = grad.cwiseProduct(step).sum();
    const Matrix direction = slope < 0.0 ? step : Matrix(-grad);
    const double dir_slope = slope < 0.0 ? slope : -gnorm * gnorm;
    bool accepted = false;
    double t = 1.0;
    for (int halving = 0; halving < 60 && !accepted; ++halving, t *= 0.5) {
      const Matrix trial = theta + t * direction;
      const Matrix zt = pb.logits(trial);
      const double ft = pb.objective(trial, zt);
      const Matrix pt = softmax_rows(zt);
      const Matrix gt = pb.gradient(trial, pt);
      const double gt_norm = gt.norm();
      bool accept = ft <= f + 1e-4 * t * dir_slope;
      if (!accept && ft <= f + kObjectiveNoise * std::max(1.0, std::abs(f))) {
        // Objective differences are at rounding level; use the gradient norm.
        accept = gt_norm < gnorm;
      }
      if (accept) {
        theta = trial;
        z = zt;
        f = ft;
        probs = pt;
        grad = gt;
        gnorm = gt_norm;
        accepted = true;
      }
    }
    if (!accepted) break;
  }

  LogisticFit fit;
  fit.head.weights = svd.vt.transpose() * theta.topRows(r);
  if (fit.head.weights.rows() != dim) throw NumericalDiagnostic("fit_logistic_head: shape mismatch");
  fit.head.bias = theta.row(r);
  fit.head.bias.array() -= fit.head.bias.mean();
  fit.iterations = it;
  fit.objective = f;

  // Report the gradient of the original problem at the mapped-back solution.
  const Matrix resid = softmax_rows(head_logits(fit.head, features)) - pb.y;
  const Matrix gw = fit.head.weights + options.c_reg * (features.transpose() * resid);
  const RowVector gb = options.c_reg * resid.colwise().sum();
  fit.gradient_norm = std::sqrt(gw.squaredNorm() + gb.squaredNorm());
  if (!(gnorm <= options.tol)) {
    throw ConvergenceError("fit_logistic_head: gradient norm " + std::to_string(fit.gradient_norm) +
                               " above tolerance after " + std::to_string(it) + " iterations",
                           fit.gradient_norm);
  }
  return fit;
}

}  // namespace metadiv::nnet
