#include "metadiv/numerics/linalg.hpp"

#include "metadiv/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace metadiv::numerics {

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw InvalidInput(std::string(what) + ": non-finite entry");
  }
}

Matrix center_columns(const Matrix& m) {
  if (m.rows() == 0) return m;
  const RowVector means = m.colwise().mean();
  return m.rowwise() - means;
}

SvdResult svd(const Matrix& m) {
  if (m.rows() < 1 || m.cols() < 1) throw InvalidInput("svd: empty matrix");
  require_finite(m, "svd");
  // One-sided QR preconditioning plus two-sided Jacobi; Eigen 3.4's BDCSVD
  // crashes on some rank-deficient inputs when built with AVX-512.
  Eigen::JacobiSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult out;
  out.u = solver.matrixU();
  out.singular_values = solver.singularValues();
  out.vt = solver.matrixV().transpose();
  return out;
}

Vector singular_values(const Matrix& m) {
  if (m.rows() < 1 || m.cols() < 1) throw InvalidInput("singular_values: empty matrix");
  require_finite(m, "singular_values");
  return Eigen::JacobiSVD<Matrix>(m).singularValues();
}

Matrix inv_sqrt_spd(const Matrix& a, double floor) {
  if (a.rows() != a.cols()) throw InvalidInput("inv_sqrt_spd: matrix is not square");
  if (!(floor > 0.0)) throw InvalidInput("inv_sqrt_spd: floor must be positive");
  require_finite(a, "inv_sqrt_spd");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InvalidInput("inv_sqrt_spd: matrix is not symmetric");
  }
  const Matrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector lambda = eig.eigenvalues().cwiseMax(floor);
  const Vector inv_root = lambda.cwiseSqrt().cwiseInverse();
  const Matrix& v = eig.eigenvectors();
  Matrix out = v * inv_root.asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

double nuclear_norm(const Matrix& m) {
  require_finite(m, "nuclear_norm");
  if (m.size() == 0) return 0.0;
  return singular_values(m).sum();
}

GramSchmidtResult gram_schmidt(const Matrix& columns, double tol) {
  require_finite(columns, "gram_schmidt");
  const Eigen::Index n = columns.rows();
  Matrix q(n, columns.cols());
  Eigen::Index kept = 0;
  std::vector<std::size_t> kept_columns;
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Vector v = columns.col(j);
    const double original = v.norm();
    if (original == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index k = 0; k < kept; ++k) {
        v -= q.col(k).dot(v) * q.col(k);
      }
    }
    const double residual = v.norm();
    if (residual <= tol * original) continue;
    q.col(kept++) = v / residual;
    kept_columns.push_back(static_cast<std::size_t>(j));
  }
  q.conservativeResize(n, kept);
  return {std::move(q), static_cast<std::size_t>(kept), std::move(kept_columns)};
}

}  // namespace metadiv::numerics
