#include "metadiv/repsim/distances.hpp"

#include "metadiv/error.hpp"
#include "metadiv/numerics/linalg.hpp"
#include "metadiv/repsim/cca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace metadiv::repsim {
namespace {

void require_same_examples(const LayerMatrix& l1, const LayerMatrix& l2, std::string_view who) {
  if (l1.examples() != l2.examples()) {
    throw InvalidInput(std::string(who) + ": example counts differ");
  }
}

LayerMatrix centered(const LayerMatrix& l, std::string_view who) {
  LayerMatrix out = l;
  out.matrix = numerics::center_columns(l.matrix);
  if (out.matrix.squaredNorm() == 0.0) {
    throw InvalidInput(std::string(who) + ": degenerate layer matrix (zero variance)");
  }
  return out;
}

double clamp_unit(double d) { return std::clamp(d, 0.0, 1.0); }

struct Truncated {
  LayerMatrix reduced;
  std::size_t removed;
};

Truncated center_and_truncate(const LayerMatrix& l, std::string_view who) {
  LayerMatrix c = centered(l, who);
  LayerMatrix reduced = truncate_svd_99(c);
  const std::size_t removed = c.features() - reduced.features();
  return {std::move(reduced), removed};
}

}  // namespace

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::svcca:
      return "svcca";
    case Metric::pwcca:
      return "pwcca";
    case Metric::lincka:
      return "lincka";
    case Metric::opd:
      return "opd";
  }
  return "svcca";
}

Metric metric_from_string(std::string_view name) {
  for (Metric m : kAllMetrics) {
    if (to_string(m) == name) return m;
  }
  throw InvalidInput("unknown metric '" + std::string(name) + "'");
}

double svcca_distance(const LayerMatrix& l1, const LayerMatrix& l2) {
  require_same_examples(l1, l2, "svcca");
  const auto a = center_and_truncate(l1, "svcca");
  const auto b = center_and_truncate(l2, "svcca");
  const auto res = cca(a.reduced, b.reduced);
  return clamp_unit(1.0 - res.correlations.mean());
}

namespace {

struct PwccaParts {
  Vector alpha;
  Vector rho;
};

PwccaParts pwcca_parts(const LayerMatrix& l1, const Truncated& a, const Truncated& b) {
  const LayerMatrix c1 = centered(l1, "pwcca");
  const auto res = cca(a.reduced, b.reduced);
  Vector weights = Vector::Zero(res.correlations.size());
  for (std::size_t k = 0; k < res.cca_vector_index.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(res.cca_vector_index[k]);
    weights(c) = (c1.matrix.transpose() * res.cca_vectors_left.col(static_cast<Eigen::Index>(k)))
                     .cwiseAbs()
                     .sum();
  }
  const double total = weights.sum();
  if (!(total > 0.0)) throw InvalidInput("pwcca: projection weights vanish");
  return {weights / total, res.correlations};
}

}  // namespace

Vector pwcca_weights(const LayerMatrix& l1, const LayerMatrix& l2) {
  require_same_examples(l1, l2, "pwcca");
  return pwcca_parts(l1, center_and_truncate(l1, "pwcca"), center_and_truncate(l2, "pwcca")).alpha;
}

double pwcca_distance(const LayerMatrix& l1, const LayerMatrix& l2, PwccaWeighting weighting) {
  require_same_examples(l1, l2, "pwcca");
  const auto a = center_and_truncate(l1, "pwcca");
  const auto b = center_and_truncate(l2, "pwcca");
  const bool swap = weighting == PwccaWeighting::fewer_truncated && b.removed < a.removed;
  const auto parts = swap ? pwcca_parts(l2, b, a) : pwcca_parts(l1, a, b);
  return clamp_unit(1.0 - parts.alpha.dot(parts.rho));
}

double lincka_distance(const LayerMatrix& l1, const LayerMatrix& l2) {
  require_same_examples(l1, l2, "lincka");
  const Matrix x = centered(l1, "lincka").matrix;
  const Matrix y = centered(l2, "lincka").matrix;
  const double cross = (x.transpose() * y).squaredNorm();
  const double self_x = (x.transpose() * x).norm();
  const double self_y = (y.transpose() * y).norm();
  return clamp_unit(1.0 - cross / (self_x * self_y));
}

double opd_distance(const LayerMatrix& l1, const LayerMatrix& l2) {
  require_same_examples(l1, l2, "opd");
  if (l1.features() != l2.features()) {
    throw InvalidInput("opd: feature counts differ (" + std::to_string(l1.features()) + " vs " +
                       std::to_string(l2.features()) + ")");
  }
  Matrix x = centered(l1, "opd").matrix;
  Matrix y = centered(l2, "opd").matrix;
  x /= x.norm();
  y /= y.norm();
  return clamp_unit(1.0 - numerics::nuclear_norm(x.transpose() * y));
}

double distance(Metric metric, const LayerMatrix& l1, const LayerMatrix& l2) {
  switch (metric) {
    case Metric::svcca:
      return svcca_distance(l1, l2);
    case Metric::pwcca:
      return pwcca_distance(l1, l2);
    case Metric::lincka:
      return lincka_distance(l1, l2);
    case Metric::opd:
      return opd_distance(l1, l2);
  }
  throw InvalidInput("unknown metric");
}

DistanceReport compare(Metric metric, const LayerMatrix& l1, const LayerMatrix& l2,
                       const SafetyPolicy& policy) {
  DistanceReport report{metric};
  report.distance = distance(metric, l1, l2);
  report.risky = safety_margin_risky(l1.examples(), l1.features(), policy) ||
                 safety_margin_risky(l2.examples(), l2.features(), policy);
  if (metric == Metric::pwcca) {
    report.asymmetry = std::abs(report.distance - pwcca_distance(l2, l1));
  }
  return report;
}

}  // namespace metadiv::repsim
