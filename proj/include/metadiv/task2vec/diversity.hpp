#pragma once

#include "metadiv/gaussbench/benchmark.hpp"
#include "metadiv/task2vec/embedding.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace metadiv::task2vec {

struct DiversityResult {
  double mean = 0.0;
  double ci95 = 0.0;
  Matrix pairwise;  // symmetric, zero diagonal
  std::size_t n_tasks = 0;

  std::size_t n_pairs() const { return n_tasks * (n_tasks - 1) / 2; }
  /// Upper-triangle distances in row-major order.
  std::vector<double> pair_distances() const;
};

/// Pairwise cosine distances of the embeddings and their mean with a 95% CI
/// over all distinct pairs.
DiversityResult diversity_from_embeddings(std::span<const TaskEmbedding> embeddings);

/// Embeds every task in parallel. Each task's label-sampling stream is keyed
/// by its content fingerprint (see embed_task), so duplicate tasks embed
/// identically.
std::vector<TaskEmbedding> embed_tasks(const ProbeNetwork& probe,
                                       std::span<const gaussbench::FewShotTask> tasks,
                                       std::size_t n_mc, const RngStream& rng);

DiversityResult diversity_coefficient(std::span<const gaussbench::FewShotTask> tasks,
                                      const ProbeNetwork& probe, std::size_t n_mc,
                                      const RngStream& rng);

/// Samples n_tasks episodes of `shape` from `classes` with rng.split(0), then
/// embeds them with rng.split(1).
DiversityResult diversity_coefficient(std::span<const gaussbench::ClassDistribution> classes,
                                      const gaussbench::TaskShape& shape, std::size_t n_tasks,
                                      const ProbeNetwork& probe, std::size_t n_mc,
                                      const RngStream& rng);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins over [min, max] of the pair distances; the last bin is
/// closed. Constant distances land in the first bin.
std::vector<HistogramBin> distance_histogram(const DiversityResult& result, std::size_t n_bins);

/// Fraction of pair distances within k sample standard deviations of the mean.
double fraction_within(const DiversityResult& result, double k_stddev);

}  // namespace metadiv::task2vec
