#pragma once

#include <span>
#include <vector>

namespace metadiv::numerics {

inline constexpr double kZ95 = 1.96;

struct MeanCi {
  double mean = 0.0;
  double halfwidth = 0.0;  // 95% normal-approximation half-width
};

/// Unbiased (n-1) sample standard deviation. Requires at least two samples.
double sample_stddev(std::span<const double> samples);

/// Mean with a 1.96 * s / sqrt(n) half-width.
MeanCi mean_ci95(std::span<const double> samples);

/// Same estimator from running sums, for reductions that never materialize
/// the sample list.
MeanCi mean_ci95_from_sums(double sum, double sum_sq, double count);

double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace metadiv::numerics
