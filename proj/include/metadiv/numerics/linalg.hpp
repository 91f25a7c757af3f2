#pragma once

#include "metadiv/numerics/matrix.hpp"

#include <cstddef>
#include <vector>

namespace metadiv::numerics {

/// Thin SVD, m = u * diag(singular_values) * vt with r = min(rows, cols).
struct SvdResult {
  Matrix u;                // rows x r
  Vector singular_values;  // r, nonincreasing, nonnegative
  Matrix vt;               // r x cols
};

SvdResult svd(const Matrix& m);

/// Singular values only, descending.
Vector singular_values(const Matrix& m);

inline constexpr double kDefaultEigenFloor = 1e-10;

/// Inverse square root of a symmetric positive semidefinite matrix. Eigenvalues
/// below `floor` are raised to `floor` before inversion.
Matrix inv_sqrt_spd(const Matrix& a, double floor = kDefaultEigenFloor);

double nuclear_norm(const Matrix& m);

struct GramSchmidtResult {
  Matrix q;                               // rows x retained, orthonormal columns
  std::size_t retained = 0;               // columns kept after dropping dependent ones
  std::vector<std::size_t> kept_columns;  // input index of each retained column
};

/// Modified Gram-Schmidt with one reorthogonalization pass. Columns whose
/// residual norm falls below `tol` times their original norm are dropped.
GramSchmidtResult gram_schmidt(const Matrix& columns, double tol = 1e-10);

}  // namespace metadiv::numerics
