#include "metadiv/nnet/mlp.hpp"

#include "metadiv/error.hpp"
#include "metadiv/nnet/inner_loop.hpp"

#include <cmath>
#include <limits>

namespace metadiv::nnet {

void MlpConfig::validate() const {
  if (input_size < 1 || output_size < 1) throw InvalidInput("mlp config: sizes must be >= 1");
  for (auto h : hidden_sizes) {
    if (h < 1) throw InvalidInput("mlp config: hidden sizes must be >= 1");
  }
}

std::size_t MlpConfig::parameter_count() const {
  return feature_parameter_count() +
         (hidden_sizes.empty() ? input_size : hidden_sizes.back()) * output_size + output_size;
}

std::size_t MlpConfig::feature_parameter_count() const {
  std::size_t count = 0;
  std::size_t fan_in = input_size;
  for (auto h : hidden_sizes) {
    count += fan_in * h + h;
    fan_in = h;
  }
  return count;
}

std::size_t ParameterSet::parameter_count() const {
  std::size_t count = 0;
  for (const auto& l : layers) count += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return count;
}

bool ParameterSet::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  for (const auto& l : layers) {
    out.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()),
                          RowVector::Zero(l.bias.size())});
  }
  return out;
}

Vector ParameterSet::flatten() const {
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index pos = 0;
  for (const auto& l : layers) {
    flat.segment(pos, l.weight.size()) = l.weight.reshaped();
    pos += l.weight.size();
    flat.segment(pos, l.bias.size()) = l.bias.transpose();
    pos += l.bias.size();
  }
  return flat;
}

void ParameterSet::assign_flat(const Vector& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw InvalidInput("assign_flat: length mismatch");
  }
  Eigen::Index pos = 0;
  for (auto& l : layers) {
    l.weight.reshaped() = flat.segment(pos, l.weight.size());
    pos += l.weight.size();
    l.bias = flat.segment(pos, l.bias.size()).transpose();
    pos += l.bias.size();
  }
}

bool operator==(const ParameterSet& a, const ParameterSet& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const auto& x = a.layers[i];
    const auto& y = b.layers[i];
    if (x.weight.rows() != y.weight.rows() || x.weight.cols() != y.weight.cols() ||
        x.bias.size() != y.bias.size()) {
      return false;
    }
    if (x.weight != y.weight || x.bias != y.bias) return false;
  }
  return true;
}

DenseLayer init_head(std::size_t features_dim, std::size_t width, RngStream& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(features_dim));
  DenseLayer layer{Matrix(static_cast<Eigen::Index>(features_dim), static_cast<Eigen::Index>(width)),
                   RowVector::Zero(static_cast<Eigen::Index>(width))};
  for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = rng.normal(0.0, stddev);
  return layer;
}

ParameterSet init_mlp(const MlpConfig& config, RngStream& rng) {
  config.validate();
  ParameterSet params;
  std::size_t fan_in = config.input_size;
  for (auto h : config.hidden_sizes) {
    params.layers.push_back(init_head(fan_in, h, rng));
    fan_in = h;
  }
  params.layers.push_back(init_head(fan_in, config.output_size, rng));
  return params;
}

MlpConfig config_of(const ParameterSet& params) {
  if (params.layers.empty()) throw InvalidInput("config_of: empty parameter set");
  MlpConfig cfg;
  cfg.input_size = static_cast<std::size_t>(params.layers.front().weight.rows());
  cfg.hidden_sizes.clear();
  for (std::size_t i = 0; i + 1 < params.layers.size(); ++i) {
    cfg.hidden_sizes.push_back(static_cast<std::size_t>(params.layers[i].weight.cols()));
  }
  cfg.output_size = static_cast<std::size_t>(params.head().weight.cols());
  return cfg;
}

std::string layer_name(std::size_t index, std::size_t layer_count) {
  if (index + 1 == layer_count) return "head";
  return "hidden" + std::to_string(index + 1);
}

ForwardResult forward(const ParameterSet& params, const Matrix& x, std::string_view source_model) {
  if (params.layers.empty()) throw InvalidInput("forward: empty parameter set");
  if (x.cols() != params.layers.front().weight.rows()) throw InvalidInput("forward: input width mismatch");
  numerics::require_finite(x, "forward input");
  ForwardResult out;
  Matrix h = x;
  const std::size_t n = params.layers.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = params.layers[i];
    Matrix z = h * l.weight;
    z.rowwise() += l.bias;
    if (i + 1 < n) z = z.cwiseMax(0.0);
    h = std::move(z);
    out.trace.push_back({h, layer_name(i, n), std::string(source_model), repsim::ReshapeMode::plain});
  }
  out.logits = std::move(h);
  return out;
}

Matrix features(const ParameterSet& params, const Matrix& x) {
  Matrix h = x;
  for (std::size_t i = 0; i + 1 < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    Matrix z = h * l.weight;
    z.rowwise() += l.bias;
    h = z.cwiseMax(0.0);
  }
  return h;
}

Matrix logits(const ParameterSet& params, const Matrix& x) {
  if (params.layers.empty()) throw InvalidInput("logits: empty parameter set");
  Matrix z = features(params, x) * params.head().weight;
  z.rowwise() += params.head().bias;
  return z;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  const Vector sums = p.rowwise().sum();
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= sums(i);
  return p;
}

double cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size() || labels.empty()) {
    throw InvalidInput("cross_entropy: label count mismatch");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols()) throw InvalidInput("cross_entropy: label out of range");
    const double m = logits.row(i).maxCoeff();
    total += m + std::log((logits.row(i).array() - m).exp().sum()) - logits(i, y);
  }
  return total / static_cast<double>(logits.rows());
}

double accuracy(const Matrix& logits, std::span<const int> labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size() || labels.empty()) {
    throw InvalidInput("accuracy: label count mismatch");
  }
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    if (!logits.row(i).allFinite()) continue;
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    if (arg == labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

LossAndGrad loss_and_grad(const ParameterSet& params, const Matrix& x, std::span<const int> labels) {
  Graph g;
  const auto vars = to_graph(g, params, true);
  const Var loss = graph_loss(g, vars, x, labels);
  g.backward(loss);
  return {g.value(loss)(0, 0), grads_of(g, vars)};
}

}  // namespace metadiv::nnet
