#pragma once

#include "metadiv/numerics/linalg.hpp"
#include "metadiv/repsim/layer_matrix.hpp"

#include <cstddef>

namespace metadiv::repsim {

struct CcaResult {
  Vector correlations;     // rho_1 >= ... >= rho_C, each in [0, 1]
  Matrix directions_left;  // D1 x C, a_c
  Matrix directions_right; // D2 x C, b_c
  Matrix cca_vectors_left; // N x C, L1 * a_c, orthonormalized (may hold fewer columns)
  std::vector<std::size_t> cca_vector_index;  // correlation index of each cca vector
};

/// Canonical correlations from the singular values of
/// S11^{-1/2} S12 S22^{-1/2}. Columns are centered first. `floor` is applied
/// to each covariance's eigenvalues relative to its mean eigenvalue.
/// Correlations overshooting 1 by more than 1e-6 raise NumericalDiagnostic.
CcaResult cca(const LayerMatrix& l1, const LayerMatrix& l2,
              double floor = numerics::kDefaultEigenFloor);

/// Smallest count D' with sum_{j<=D'} sigma_j >= 0.99 * sum_j sigma_j.
std::size_t svd_keep_count(const Vector& singular_values, double keep = 0.99);

/// Projects onto the top right-singular directions that keep 0.99 of the
/// absolute singular-value mass: returns L * V[:, 1..D'].
LayerMatrix truncate_svd_99(const LayerMatrix& l);

}  // namespace metadiv::repsim
