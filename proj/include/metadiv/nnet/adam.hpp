#pragma once

#include "metadiv/nnet/mlp.hpp"

#include <cstddef>

namespace metadiv::nnet {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
  AdamConfig config;
  ParameterSet first_moment;
  ParameterSet second_moment;
  std::size_t step = 0;
};

AdamState make_adam(const ParameterSet& like, const AdamConfig& config = {});

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, ParameterSet& params, const ParameterSet& grads);

}  // namespace metadiv::nnet
