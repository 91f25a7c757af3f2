#include "metadiv/nnet/adam.hpp"

#include "metadiv/error.hpp"

#include <cmath>

namespace metadiv::nnet {
namespace {

template <class Param, class Moment>
void update(Param& p, Moment& m, Moment& v, const Param& g, const AdamConfig& c, double bc1,
            double bc2) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
  p.array() -= c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
}

}  // namespace

AdamState make_adam(const ParameterSet& like, const AdamConfig& config) {
  return {config, like.zeros_like(), like.zeros_like(), 0};
}

void adam_step(AdamState& state, ParameterSet& params, const ParameterSet& grads) {
  if (params.layers.size() != grads.layers.size() ||
      params.layers.size() != state.first_moment.layers.size()) {
    throw InvalidInput("adam_step: layer count mismatch");
  }
  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& p = params.layers[i];
    const auto& g = grads.layers[i];
    auto& m = state.first_moment.layers[i];
    auto& v = state.second_moment.layers[i];
    if (p.weight.rows() != g.weight.rows() || p.weight.cols() != g.weight.cols() ||
        p.bias.size() != g.bias.size()) {
      throw InvalidInput("adam_step: gradient shape mismatch");
    }
    update(p.weight, m.weight, v.weight, g.weight, c, bc1, bc2);
    update(p.bias, m.bias, v.bias, g.bias, c, bc1, bc2);
  }
}

}  // namespace metadiv::nnet
