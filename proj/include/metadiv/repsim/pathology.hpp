#pragma once

#include "metadiv/numerics/rng.hpp"

#include <cstddef>
#include <vector>

namespace metadiv::repsim {

struct PathologyCell {
  std::size_t dim = 0;
  std::size_t n_points = 0;
  double similarity = 0.0;  // mean SVCCA similarity over seeds
  double ci95 = 0.0;
  std::size_t seeds = 0;
};

/// SVCCA similarity of pairs of independent standard-normal N x D matrices
/// for every (D, N) in the grid product, averaged over `seeds` draws.
std::vector<PathologyCell> pathology_curve(const std::vector<std::size_t>& dim_grid,
                                           const std::vector<std::size_t>& n_points_grid,
                                           const RngStream& rng, std::size_t seeds = 10);

}  // namespace metadiv::repsim
