#include "metadiv/task2vec/diversity.hpp"

#include "metadiv/error.hpp"
#include "metadiv/numerics/parallel.hpp"
#include "metadiv/numerics/stats.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace metadiv::task2vec {

std::vector<double> DiversityResult::pair_distances() const {
  std::vector<double> out;
  out.reserve(n_pairs());
  for (Eigen::Index i = 0; i < pairwise.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < pairwise.cols(); ++j) out.push_back(pairwise(i, j));
  }
  return out;
}

DiversityResult diversity_from_embeddings(std::span<const TaskEmbedding> embeddings) {
  const std::size_t n = embeddings.size();
  if (n < 2) throw InsufficientData("diversity: need at least 2 tasks");
  DiversityResult result;
  result.n_tasks = n;
  result.pairwise = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = cosine_distance(embeddings[i], embeddings[j]);
      result.pairwise(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
      result.pairwise(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d;
    }
  });
  const std::vector<double> pairs = result.pair_distances();
  const numerics::MeanCi stats = numerics::mean_ci95(pairs);
  result.mean = stats.mean;
  result.ci95 = stats.halfwidth;
  return result;
}

std::vector<TaskEmbedding> embed_tasks(const ProbeNetwork& probe,
                                       std::span<const gaussbench::FewShotTask> tasks,
                                       std::size_t n_mc, const RngStream& rng) {
  std::vector<std::optional<TaskEmbedding>> slots(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    slots[i] = embed_task(probe, tasks[i], n_mc, rng);
  });
  std::vector<TaskEmbedding> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

DiversityResult diversity_coefficient(std::span<const gaussbench::FewShotTask> tasks,
                                      const ProbeNetwork& probe, std::size_t n_mc,
                                      const RngStream& rng) {
  if (tasks.size() < 2) throw InsufficientData("diversity_coefficient: need at least 2 tasks");
  const std::vector<TaskEmbedding> embeddings = embed_tasks(probe, tasks, n_mc, rng);
  return diversity_from_embeddings(embeddings);
}

DiversityResult diversity_coefficient(std::span<const gaussbench::ClassDistribution> classes,
                                      const gaussbench::TaskShape& shape, std::size_t n_tasks,
                                      const ProbeNetwork& probe, std::size_t n_mc,
                                      const RngStream& rng) {
  const auto tasks = gaussbench::sample_tasks(classes, shape, n_tasks, rng.split(0));
  return diversity_coefficient(tasks, probe, n_mc, rng.split(1));
}

std::vector<HistogramBin> distance_histogram(const DiversityResult& result, std::size_t n_bins) {
  if (result.n_tasks < 2) throw InsufficientData("distance_histogram: need at least 2 tasks");
  if (n_bins == 0) throw InvalidInput("distance_histogram: n_bins must be positive");
  const std::vector<double> pairs = result.pair_distances();
  const auto [lo_it, hi_it] = std::minmax_element(pairs.begin(), pairs.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double width = (hi - lo) / static_cast<double>(n_bins);
  std::vector<HistogramBin> bins(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    bins[b].lo = lo + width * static_cast<double>(b);
    bins[b].hi = b + 1 == n_bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (double d : pairs) {
    std::size_t b = 0;
    if (width > 0.0) {
      b = static_cast<std::size_t>(std::floor((d - lo) / width));
      b = std::min(b, n_bins - 1);
    }
    ++bins[b].count;
  }
  return bins;
}

double fraction_within(const DiversityResult& result, double k_stddev) {
  const std::vector<double> pairs = result.pair_distances();
  if (pairs.size() < 2) throw InsufficientData("fraction_within: need at least 2 pairs");
  const numerics::MeanCi stats = numerics::mean_ci95(pairs);
  const double sd = numerics::sample_stddev(pairs);
  const auto inside = std::count_if(pairs.begin(), pairs.end(), [&](double d) {
    return std::abs(d - stats.mean) <= k_stddev * sd;
  });
  return static_cast<double>(inside) / static_cast<double>(pairs.size());
}

}  // namespace metadiv::task2vec
