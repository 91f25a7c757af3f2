#pragma once

#include "metadiv/repsim/layer_matrix.hpp"

#include <array>
#include <string_view>

namespace metadiv::repsim {

enum class Metric { svcca, pwcca, lincka, opd };

inline constexpr std::array<Metric, 4> kAllMetrics = {Metric::svcca, Metric::pwcca,
                                                      Metric::lincka, Metric::opd};

std::string_view to_string(Metric metric);
Metric metric_from_string(std::string_view name);

/// 1 - mean canonical correlation after centering and 0.99 SVD truncation.
double svcca_distance(const LayerMatrix& l1, const LayerMatrix& l2);

enum class PwccaWeighting {
  first_argument,  // weights from the neurons of l1
  fewer_truncated, // whichever side lost fewer directions to SVD truncation
};

/// 1 - sum_c alpha_c rho_c, alpha_c proportional to sum_j |<x_c, z_j>| over
/// the weighting side's centered neuron vectors z_j.
double pwcca_distance(const LayerMatrix& l1, const LayerMatrix& l2,
                      PwccaWeighting weighting = PwccaWeighting::first_argument);

/// Projection weights alpha_c used by pwcca_distance (sum to 1).
Vector pwcca_weights(const LayerMatrix& l1, const LayerMatrix& l2);

/// 1 - ||X^T Y||_F^2 / (||X^T X||_F ||Y^T Y||_F) on centered columns.
double lincka_distance(const LayerMatrix& l1, const LayerMatrix& l2);

/// 1 - ||X^T Y||_* with X, Y centered and scaled to unit Frobenius norm.
double opd_distance(const LayerMatrix& l1, const LayerMatrix& l2);

double distance(Metric metric, const LayerMatrix& l1, const LayerMatrix& l2);

/// A metric evaluation together with its safety assessment.
struct DistanceReport {
  Metric metric;
  double distance = 0.0;
  bool risky = false;      // fewer than s examples per feature on either side
  double asymmetry = 0.0;  // |d(l1,l2) - d(l2,l1)|, only computed for pwcca
};

DistanceReport compare(Metric metric, const LayerMatrix& l1, const LayerMatrix& l2,
                       const SafetyPolicy& policy = {});

}  // namespace metadiv::repsim
