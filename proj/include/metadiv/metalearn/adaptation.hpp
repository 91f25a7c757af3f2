#pragma once

#include "metadiv/nnet/mlp.hpp"
#include "metadiv/numerics/rng.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace metadiv::metalearn {

/// Test-time adaptation applied to an initialization before scoring a task.
struct AdaptationMethod {
  enum class Kind { none, maml_k, head_lr };

  Kind kind = Kind::none;
  std::size_t steps = 0;   // maml_k
  double inner_lr = 0.1;   // maml_k
  double c_reg = 1.0;      // head_lr

  static AdaptationMethod none() { return {}; }
  static AdaptationMethod maml(std::size_t steps, double inner_lr = 0.1);
  static AdaptationMethod head_lr(double c_reg = 1.0);

  void validate() const;
  /// "none", "maml_<k>" or "head_lr".
  std::string label() const;

  friend bool operator==(const AdaptationMethod&, const AdaptationMethod&) = default;
};

AdaptationMethod adaptation_from_string(std::string_view label);

/// Adapts `params` to an n_way support batch.
///  - none: unchanged, except that a head of the wrong width is replaced by a
///    fresh He-normal n_way head drawn from `head_rng`.
///  - maml_k: k plain SGD steps on the support cross-entropy, all layers. A
///    head of the wrong width is first replaced by `head_init`, which must be
///    supplied and have width n_way.
///  - head_lr: the head is replaced by the logistic-regression head fit on the
///    support features.
nnet::ParameterSet adapt(const nnet::ParameterSet& params, const Matrix& support_x,
                         std::span<const int> support_y, std::size_t n_way,
                         const AdaptationMethod& method,
                         const std::optional<nnet::DenseLayer>& head_init, RngStream& head_rng);

}  // namespace metadiv::metalearn
