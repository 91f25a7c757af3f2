#include "metadiv/metalearn/adaptation.hpp"

#include "metadiv/error.hpp"
#include "metadiv/nnet/inner_loop.hpp"
#include "metadiv/nnet/logistic_head.hpp"

#include <charconv>

namespace metadiv::metalearn {

AdaptationMethod AdaptationMethod::maml(std::size_t steps, double inner_lr) {
  AdaptationMethod m;
  m.kind = Kind::maml_k;
  m.steps = steps;
  m.inner_lr = inner_lr;
  return m;
}

AdaptationMethod AdaptationMethod::head_lr(double c_reg) {
  AdaptationMethod m;
  m.kind = Kind::head_lr;
  m.c_reg = c_reg;
  return m;
}

void AdaptationMethod::validate() const {
  if (kind == Kind::maml_k && steps < 1) throw InvalidInput("maml adaptation needs at least 1 step");
  if (kind == Kind::maml_k && !(inner_lr > 0.0)) throw InvalidInput("maml inner_lr must be positive");
  if (kind == Kind::head_lr && !(c_reg > 0.0)) throw InvalidInput("head_lr c_reg must be positive");
}

std::string AdaptationMethod::label() const {
  switch (kind) {
    case Kind::none: return "none";
    case Kind::maml_k: return "maml_" + std::to_string(steps);
    case Kind::head_lr: return "head_lr";
  }
  return "none";
}

AdaptationMethod adaptation_from_string(std::string_view label) {
  if (label == "none") return AdaptationMethod::none();
  if (label == "head_lr") return AdaptationMethod::head_lr();
  constexpr std::string_view prefix = "maml_";
  if (label.substr(0, prefix.size()) == prefix) {
    std::size_t steps = 0;
    const auto digits = label.substr(prefix.size());
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), steps);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && steps >= 1) {
      return AdaptationMethod::maml(steps);
    }
  }
  throw InvalidInput("unknown adaptation '" + std::string(label) + "'");
}

nnet::ParameterSet adapt(const nnet::ParameterSet& params, const Matrix& support_x,
                         std::span<const int> support_y, std::size_t n_way,
                         const AdaptationMethod& method,
                         const std::optional<nnet::DenseLayer>& head_init, RngStream& head_rng) {
  method.validate();
  if (params.layers.size() < 2) throw InvalidInput("adapt: need a feature extractor and a head");
  const bool width_ok = static_cast<std::size_t>(params.head().weight.cols()) == n_way;
  switch (method.kind) {
    case AdaptationMethod::Kind::none: {
      if (width_ok) return params;
      nnet::ParameterSet out = params;
      out.head() = nnet::init_head(static_cast<std::size_t>(params.head().weight.rows()), n_way,
                                   head_rng);
      return out;
    }
    case AdaptationMethod::Kind::maml_k: {
      nnet::ParameterSet start = params;
      if (!width_ok) {
        if (!head_init) {
          throw InvalidInput("adapt: maml adaptation of a " +
                             std::to_string(params.head().weight.cols()) +
                             "-way head needs an n_way head_init");
        }
        if (head_init->weight.rows() != params.head().weight.rows() ||
            static_cast<std::size_t>(head_init->weight.cols()) != n_way ||
            head_init->bias.size() != head_init->weight.cols()) {
          throw InvalidInput("adapt: head_init has the wrong shape");
        }
        start.head() = *head_init;
      }
      return nnet::sgd_adapt(start, support_x, support_y, method.steps, method.inner_lr);
    }
    case AdaptationMethod::Kind::head_lr: {
      nnet::LogisticOptions options;
      options.c_reg = method.c_reg;
      const Matrix feats = nnet::features(params, support_x);
      const nnet::LogisticFit fit = nnet::fit_logistic_head(feats, support_y, n_way, options);
      nnet::ParameterSet out = params;
      out.head() = nnet::DenseLayer{fit.head.weights, fit.head.bias};
      return out;
    }
  }
  throw InvalidInput("adapt: unknown method");
}

}  // namespace metadiv::metalearn
