#pragma once

#include "metadiv/gaussbench/benchmark.hpp"

#include <cstddef>

namespace metadiv::gaussbench {

/// Squared Hellinger distance between two univariate Gaussians (closed form).
double hellinger_squared(const GaussianParams& a, const GaussianParams& b);

struct HellingerDiversity {
  double mean = 0.0;
  double ci95 = 0.0;
  std::size_t n_pairs = 0;
};

inline constexpr std::size_t kDefaultHellingerPairs = 100000;

/// Monte Carlo estimate of E[H^2] over independent class pairs drawn from the
/// spec's hyperprior. Pairs are generated in fixed-size chunks, chunk c from
/// rng.split(c), and merged in chunk order, so the estimate does not depend on
/// the worker count.
HellingerDiversity hellinger_diversity(const BenchmarkSpec& spec,
                                       std::size_t n_pairs, const RngStream& rng);

}  // namespace metadiv::gaussbench
