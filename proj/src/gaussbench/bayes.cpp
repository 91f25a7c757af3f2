#include "metadiv/gaussbench/bayes.hpp"

#include "metadiv/error.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace metadiv::gaussbench {

int bayes_predict(std::span<const WayClass> ways, double x) {
  int best = 0;
  double best_logp = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < ways.size(); ++k) {
    const double z = (x - ways[k].mu) / ways[k].sigma;
    const double logp = -0.5 * z * z - std::log(ways[k].sigma);
    if (logp > best_logp) {
      best_logp = logp;
      best = static_cast<int>(k);
    }
  }
  return best;
}

numerics::MeanCi bayes_accuracy(const FewShotTask& task, std::size_t n_mc, RngStream& rng) {
  if (task.ways.size() < 2) throw InvalidInput("bayes_accuracy: need at least 2 ways");
  if (n_mc < 2) throw InvalidInput("bayes_accuracy: need at least 2 draws");
  double hits = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    const auto way = static_cast<int>(rng.below(task.ways.size()));
    const auto& w = task.ways[static_cast<std::size_t>(way)];
    const double x = rng.normal(w.mu, w.sigma);
    if (bayes_predict(task.ways, x) == way) hits += 1.0;
  }
  // Bernoulli draws: sum of squares equals the sum.
  return numerics::mean_ci95_from_sums(hits, hits, static_cast<double>(n_mc));
}

}  // namespace metadiv::gaussbench
