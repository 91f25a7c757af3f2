#include "metadiv/numerics/stats.hpp"

#include "metadiv/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace metadiv::numerics {
namespace {

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double sample_stddev(std::span<const double> samples) {
  if (samples.size() < 2) throw InsufficientData("sample_stddev: need at least 2 samples");
  const double m = mean_of(samples);
  double ss = 0.0;
  for (double x : samples) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(samples.size() - 1));
}

MeanCi mean_ci95(std::span<const double> samples) {
  if (samples.size() < 2) throw InsufficientData("mean_ci95: need at least 2 samples");
  // Welford: constant samples give their value and a zero half-width exactly.
  double mean = 0.0;
  double m2 = 0.0;
  double n = 0.0;
  for (double x : samples) {
    n += 1.0;
    const double delta = x - mean;
    mean += delta / n;
    m2 += delta * (x - mean);
  }
  return {mean, kZ95 * std::sqrt(m2 / (n - 1.0)) / std::sqrt(n)};
}

MeanCi mean_ci95_from_sums(double sum, double sum_sq, double count) {
  if (count < 2.0) throw InsufficientData("mean_ci95: need at least 2 samples");
  const double mean = sum / count;
  const double var = std::max(0.0, (sum_sq - count * mean * mean) / (count - 1.0));
  return {mean, kZ95 * std::sqrt(var / count)};
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidInput("pearson: length mismatch");
  if (x.size() < 2) throw InsufficientData("pearson: need at least 2 pairs");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedResult("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidInput("spearman: length mismatch");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

}  // namespace metadiv::numerics
