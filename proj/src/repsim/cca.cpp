#include "metadiv/repsim/cca.hpp"

#include "metadiv/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace metadiv::repsim {
namespace {

constexpr double kOvershootTolerance = 1e-6;

Matrix whitening(const Matrix& cov, double floor) {
  const double mean_eig = cov.trace() / static_cast<double>(cov.rows());
  if (!(mean_eig > 0.0)) throw InvalidInput("cca: layer matrix has zero variance");
  return numerics::inv_sqrt_spd(cov, floor * mean_eig);
}

}  // namespace

CcaResult cca(const LayerMatrix& l1, const LayerMatrix& l2, double floor) {
  if (l1.examples() != l2.examples()) {
    throw InvalidInput("cca: example counts differ (" + std::to_string(l1.examples()) + " vs " +
                       std::to_string(l2.examples()) + ")");
  }
  if (l1.examples() < 2) throw InvalidInput("cca: need at least 2 examples");
  const Matrix x = numerics::center_columns(l1.matrix);
  const Matrix y = numerics::center_columns(l2.matrix);
  const double denom = static_cast<double>(l1.examples() - 1);
  const Matrix s11 = (x.transpose() * x) / denom;
  const Matrix s22 = (y.transpose() * y) / denom;
  const Matrix s12 = (x.transpose() * y) / denom;
  const Matrix w1 = whitening(s11, floor);
  const Matrix w2 = whitening(s22, floor);

  const auto dec = numerics::svd(w1 * s12 * w2);
  const Eigen::Index c = std::min(x.cols(), y.cols());

  CcaResult out;
  out.correlations = dec.singular_values.head(c);
  for (Eigen::Index i = 0; i < c; ++i) {
    double& rho = out.correlations(i);
    if (rho > 1.0 + kOvershootTolerance) {
      throw NumericalDiagnostic("cca: canonical correlation " + std::to_string(rho) +
                                " exceeds 1; covariance is ill-conditioned");
    }
    rho = std::clamp(rho, 0.0, 1.0);
  }
  out.directions_left = w1 * dec.u.leftCols(c);
  out.directions_right = w2 * dec.vt.topRows(c).transpose();
  auto gs = numerics::gram_schmidt(x * out.directions_left);
  out.cca_vectors_left = std::move(gs.q);
  out.cca_vector_index = std::move(gs.kept_columns);
  return out;
}

std::size_t svd_keep_count(const Vector& singular_values, double keep) {
  const double total = singular_values.cwiseAbs().sum();
  if (total == 0.0) return 0;
  const double threshold = keep * total;
  double running = 0.0;
  for (Eigen::Index j = 0; j < singular_values.size(); ++j) {
    running += std::abs(singular_values(j));
    // Relative slack absorbs rounding in the running sum.
    if (running >= threshold * (1.0 - 1e-12)) return static_cast<std::size_t>(j + 1);
  }
  return static_cast<std::size_t>(singular_values.size());
}

LayerMatrix truncate_svd_99(const LayerMatrix& l) {
  const auto dec = numerics::svd(l.matrix);
  const std::size_t keep = std::max<std::size_t>(1, svd_keep_count(dec.singular_values));
  LayerMatrix out = l;
  out.matrix = l.matrix * dec.vt.topRows(static_cast<Eigen::Index>(keep)).transpose();
  return out;
}

}  // namespace metadiv::repsim
