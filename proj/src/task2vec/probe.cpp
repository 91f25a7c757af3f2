#include "metadiv/task2vec/probe.hpp"

#include "metadiv/error.hpp"

#include <cmath>
#include <string>

namespace metadiv::task2vec {
namespace {

// Columns whose batch stddev is below this are only centered.
constexpr double kMinStddev = 1e-12;

/// Standardizes columns in place and returns 1 / stddev per column.
RowVector standardize(Matrix& m) {
  RowVector inv(m.cols());
  if (m.rows() < 2) {
    inv.setOnes();
    return inv;
  }
  const RowVector mean = m.colwise().mean();
  m.rowwise() -= mean;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double sd = std::sqrt(m.col(c).squaredNorm() / static_cast<double>(m.rows() - 1));
    inv(c) = sd > kMinStddev ? 1.0 / sd : 1.0;
    m.col(c) *= inv(c);
  }
  return inv;
}

}  // namespace

std::string_view to_string(ProbeNorm norm) {
  switch (norm) {
    case ProbeNorm::none: return "none";
    case ProbeNorm::input: return "input";
    case ProbeNorm::all_layers: return "all_layers";
  }
  return "none";
}

ProbeNorm probe_norm_from_string(std::string_view name) {
  if (name == "none") return ProbeNorm::none;
  if (name == "input") return ProbeNorm::input;
  if (name == "all_layers") return ProbeNorm::all_layers;
  throw InvalidInput("unknown probe norm '" + std::string(name) + "'");
}

std::string_view to_string(ProbeBias bias) {
  return bias == ProbeBias::zero ? "zero" : "uniform_fan_in";
}

ProbeBias probe_bias_from_string(std::string_view name) {
  if (name == "zero") return ProbeBias::zero;
  if (name == "uniform_fan_in") return ProbeBias::uniform_fan_in;
  throw InvalidInput("unknown probe bias '" + std::string(name) + "'");
}

ProbeNetwork::ProbeNetwork(nnet::MlpConfig config, nnet::ParameterSet feature_params,
                           std::uint64_t probe_seed, ProbeNorm norm)
    : config_(std::move(config)),
      feature_params_(std::move(feature_params)),
      probe_seed_(probe_seed),
      norm_(norm) {
  config_.validate();
  if (feature_params_.layers.size() != config_.hidden_sizes.size()) {
    throw InvalidInput("ProbeNetwork: one layer per hidden size expected");
  }
  std::size_t fan_in = config_.input_size;
  for (std::size_t i = 0; i < feature_params_.layers.size(); ++i) {
    const auto& layer = feature_params_.layers[i];
    if (static_cast<std::size_t>(layer.weight.rows()) != fan_in ||
        static_cast<std::size_t>(layer.weight.cols()) != config_.hidden_sizes[i] ||
        layer.bias.size() != layer.weight.cols()) {
      throw InvalidInput("ProbeNetwork: layer shape does not match config");
    }
    fan_in = config_.hidden_sizes[i];
  }
  if (!feature_params_.all_finite()) throw InvalidInput("ProbeNetwork: non-finite parameters");
}

std::size_t ProbeNetwork::feature_dim() const { return config_.hidden_sizes.back(); }

std::vector<ProbeLayerTrace> ProbeNetwork::trace(const Matrix& x) const {
  std::vector<ProbeLayerTrace> out;
  Matrix h = x;
  if (norm_ != ProbeNorm::none) standardize(h);
  for (const auto& layer : feature_params_.layers) {
    ProbeLayerTrace t;
    t.input = h;
    t.pre = h * layer.weight;
    t.pre.rowwise() += layer.bias;
    if (norm_ == ProbeNorm::all_layers) {
      t.inv_scale = standardize(t.pre);
    } else {
      t.inv_scale = RowVector::Ones(t.pre.cols());
    }
    h = t.pre.cwiseMax(0.0);
    out.push_back(std::move(t));
  }
  return out;
}

Matrix ProbeNetwork::features(const Matrix& x) const {
  return trace(x).back().pre.cwiseMax(0.0);
}

ProbeNetwork make_probe(const nnet::MlpConfig& config, std::uint64_t seed,
                        const ProbeOptions& options) {
  config.validate();
  RngStream rng(seed, 0);
  nnet::ParameterSet params = nnet::init_mlp(config, rng);
  params.layers.pop_back();
  if (options.bias == ProbeBias::uniform_fan_in) {
    RngStream bias_rng = rng.split(1);
    for (auto& layer : params.layers) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.rows()));
      for (Eigen::Index j = 0; j < layer.bias.size(); ++j) {
        layer.bias(j) = bound * (2.0 * bias_rng.uniform() - 1.0);
      }
    }
  }
  return ProbeNetwork(config, std::move(params), seed, options.norm);
}

}  // namespace metadiv::task2vec
