#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace metadiv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

namespace numerics {

bool all_finite(const Matrix& m);

/// Throws InvalidInput naming `what` when any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view what);

/// Subtracts the column means.
Matrix center_columns(const Matrix& m);

}  // namespace numerics
}  // namespace metadiv
