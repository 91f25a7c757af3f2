#include "metadiv/gaussbench/hellinger.hpp"

#include "metadiv/error.hpp"
#include "metadiv/numerics/parallel.hpp"
#include "metadiv/numerics/stats.hpp"

#include <algorithm>
#include <cmath>

namespace metadiv::gaussbench {
namespace {

constexpr std::size_t kChunk = 4096;

}  // namespace

double hellinger_squared(const GaussianParams& a, const GaussianParams& b) {
  if (!(a.sigma > 0.0) || !(b.sigma > 0.0)) {
    throw InvalidInput("hellinger_squared: stddevs must be positive");
  }
  const double var_sum = a.sigma * a.sigma + b.sigma * b.sigma;
  const double dmu = a.mu - b.mu;
  const double bc = std::sqrt(2.0 * a.sigma * b.sigma / var_sum) * std::exp(-0.25 * dmu * dmu / var_sum);
  return std::clamp(1.0 - bc, 0.0, 1.0);
}

HellingerDiversity hellinger_diversity(const BenchmarkSpec& spec, std::size_t n_pairs,
                                       const RngStream& rng) {
  spec.validate();
  if (n_pairs < 100) throw InvalidInput("hellinger_diversity: need at least 100 pairs");
  const std::size_t chunks = (n_pairs + kChunk - 1) / kChunk;
  std::vector<double> sums(chunks), sums_sq(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    RngStream local = rng.split(c);
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(n_pairs, begin + kChunk);
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto a = draw_class_params(spec, local);
      const auto b = draw_class_params(spec, local);
      const double h = hellinger_squared(a, b);
      s += h;
      s2 += h * h;
    }
    sums[c] = s;
    sums_sq[c] = s2;
  });
  double s = 0.0, s2 = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    s += sums[c];
    s2 += sums_sq[c];
  }
  const auto ci = numerics::mean_ci95_from_sums(s, s2, static_cast<double>(n_pairs));
  return {ci.mean, ci.halfwidth, n_pairs};
}

}  // namespace metadiv::gaussbench
