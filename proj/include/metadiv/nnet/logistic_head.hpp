#pragma once

#include "metadiv/numerics/matrix.hpp"

#include <cstddef>
#include <span>

namespace metadiv::nnet {

/// Multinomial logistic-regression head: logits = features * weights + bias.
struct LogisticHead {
  Matrix weights;  // D x n
  RowVector bias;  // n
};

struct LogisticOptions {
  double c_reg = 1.0;  // inverse regularization strength
  double tol = 1e-8;   // gradient-norm stopping threshold
  std::size_t max_iter = 200;
};

struct LogisticFit {
  LogisticHead head;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  double objective = 0.0;
};

/// 0.5 * ||W||^2 + c_reg * sum_i crossentropy_i (bias unpenalized).
double logistic_objective(const LogisticHead& head, const Matrix& features,
                          std::span<const int> labels, double c_reg);

/// Minimizes logistic_objective by damped Newton steps in the span of the
/// training rows (weights = V * B from the thin SVD of the features), with
/// Armijo backtracking. The objective is strictly convex in the weights, so the
/// result is unique up to a common shift of the bias, which stays zero-mean.
/// Throws ConvergenceError if the gradient norm is still above tol after
/// max_iter Newton steps.
LogisticFit fit_logistic_head(const Matrix& features, std::span<const int> labels,
                              std::size_t n_classes, const LogisticOptions& options = {});

Matrix head_logits(const LogisticHead& head, const Matrix& features);

}  // namespace metadiv::nnet
