#pragma once

#include "metadiv/gaussbench/benchmark.hpp"
#include "metadiv/numerics/stats.hpp"

#include <cstddef>
#include <span>

namespace metadiv::gaussbench {

/// Way with the highest log-density at x (lowest index on ties).
int bayes_predict(std::span<const WayClass> ways, double x);

/// Monte Carlo accuracy of the maximum-density classifier that knows every
/// way's true Gaussian, under a uniform prior over ways.
numerics::MeanCi bayes_accuracy(const FewShotTask& task, std::size_t n_mc, RngStream& rng);

}  // namespace metadiv::gaussbench
