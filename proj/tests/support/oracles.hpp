#pragma once

// Reference computations that share no code path with the library.

#include "metadiv/numerics/matrix.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

using metadiv::Matrix;
using metadiv::Vector;

/// Canonical correlations by the Bjorck-Golub route: orthonormal bases of the
/// centered column spaces from Householder QR, then the singular values of
/// Q1^T Q2. Requires full column rank.
inline Vector canonical_correlations(const Matrix& a, const Matrix& b) {
  const Matrix ac = a.rowwise() - a.colwise().mean();
  const Matrix bc = b.rowwise() - b.colwise().mean();
  Eigen::HouseholderQR<Matrix> qa(ac), qb(bc);
  const Matrix q1 = qa.householderQ() * Matrix::Identity(ac.rows(), ac.cols());
  const Matrix q2 = qb.householderQ() * Matrix::Identity(bc.rows(), bc.cols());
  Eigen::JacobiSVD<Matrix> svd(q1.transpose() * q2);
  return svd.singularValues();
}

inline double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// 0.5 * integral (sqrt p - sqrt q)^2 by composite Simpson over +-12 sigma.
inline double hellinger_squared_quadrature(double mu1, double s1, double mu2, double s2,
                                           int intervals = 200000) {
  const double lo = std::min(mu1 - 12 * s1, mu2 - 12 * s2);
  const double hi = std::max(mu1 + 12 * s1, mu2 + 12 * s2);
  const double h = (hi - lo) / intervals;
  auto f = [&](double x) {
    const double d = std::sqrt(normal_pdf(x, mu1, s1)) - std::sqrt(normal_pdf(x, mu2, s2));
    return d * d;
  };
  double sum = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return 0.5 * sum * h / 3.0;
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Central differences of f at x, coordinate by coordinate.
inline Vector finite_difference_gradient(const std::function<double(const Vector&)>& f, Vector x,
                                         double h = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x(i);
    x(i) = keep + h;
    const double up = f(x);
    x(i) = keep - h;
    const double down = f(x);
    x(i) = keep;
    g(i) = (up - down) / (2 * h);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||, floor).
inline double relative_error(const Vector& a, const Vector& b, double floor = 1e-8) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

/// Haar-distributed orthogonal matrix from the QR of a Gaussian matrix.
template <class Rng>
Matrix random_orthogonal(Eigen::Index n, Rng& rng) {
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

template <class Rng>
Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

}  // namespace oracle
