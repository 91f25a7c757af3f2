#include "metadiv/repsim/pathology.hpp"

#include "metadiv/error.hpp"
#include "metadiv/numerics/parallel.hpp"
#include "metadiv/numerics/stats.hpp"
#include "metadiv/repsim/distances.hpp"

namespace metadiv::repsim {
namespace {

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, RngStream& rng) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

std::vector<PathologyCell> pathology_curve(const std::vector<std::size_t>& dim_grid,
                                           const std::vector<std::size_t>& n_points_grid,
                                           const RngStream& rng, std::size_t seeds) {
  if (dim_grid.empty() || n_points_grid.empty()) throw InvalidInput("pathology_curve: empty grid");
  if (seeds < 2) throw InvalidInput("pathology_curve: need at least 2 seeds per cell");
  std::vector<PathologyCell> cells;
  for (std::size_t d : dim_grid) {
    for (std::size_t n : n_points_grid) {
      if (d < 1 || n < 2) throw InvalidInput("pathology_curve: need D >= 1 and N >= 2");
      cells.push_back({d, n, 0.0, 0.0, seeds});
    }
  }
  std::vector<double> sims(cells.size() * seeds);
  parallel_for(sims.size(), [&](std::size_t job) {
    const auto& cell = cells[job / seeds];
    // Keyed by (D, N, seed) so a cell's draws do not depend on the grid layout.
    RngStream local = rng.split(cell.dim).split(cell.n_points).split(job % seeds);
    const auto a = make_layer_matrix(gaussian_matrix(cell.n_points, cell.dim, local));
    const auto b = make_layer_matrix(gaussian_matrix(cell.n_points, cell.dim, local));
    sims[job] = 1.0 - svcca_distance(a, b);
  });
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto ci = numerics::mean_ci95(std::span<const double>(sims).subspan(i * seeds, seeds));
    cells[i].similarity = ci.mean;
    cells[i].ci95 = ci.halfwidth;
  }
  return cells;
}

}  // namespace metadiv::repsim
