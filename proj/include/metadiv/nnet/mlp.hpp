#pragma once

#include "metadiv/numerics/matrix.hpp"
#include "metadiv/numerics/rng.hpp"
#include "metadiv/repsim/layer_matrix.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace metadiv::nnet {

enum class Activation { relu };

/// Fully connected Linear+ReLU blocks followed by a linear head.
struct MlpConfig {
  std::size_t input_size = 1;
  std::vector<std::size_t> hidden_sizes{128, 128};
  std::size_t output_size = 5;
  Activation activation = Activation::relu;

  void validate() const;
  std::size_t parameter_count() const;
  /// Parameters of every layer except the head.
  std::size_t feature_parameter_count() const;

  friend bool operator==(const MlpConfig&, const MlpConfig&) = default;
};

/// z = x * weight + bias, weight is fan_in x fan_out.
struct DenseLayer {
  Matrix weight;
  RowVector bias;
};

struct ParameterSet {
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const;
  const DenseLayer& head() const { return layers.back(); }
  DenseLayer& head() { return layers.back(); }
  bool all_finite() const;

  /// Same shapes, all zeros.
  ParameterSet zeros_like() const;
  /// Flattened copy in layer order (weights column-major, then bias).
  Vector flatten() const;
  void assign_flat(const Vector& flat);

  friend bool operator==(const ParameterSet& a, const ParameterSet& b);
};

/// He-normal weights (stddev sqrt(2 / fan_in)) and zero biases.
ParameterSet init_mlp(const MlpConfig& config, RngStream& rng);

/// He-normal head of the given width on top of `features_dim` inputs.
DenseLayer init_head(std::size_t features_dim, std::size_t width, RngStream& rng);

MlpConfig config_of(const ParameterSet& params);

struct ForwardResult {
  Matrix logits;
  /// Post-activation output of every hidden layer, then the logits.
  std::vector<repsim::LayerMatrix> trace;
};

ForwardResult forward(const ParameterSet& params, const Matrix& x,
                      std::string_view source_model = {});

Matrix logits(const ParameterSet& params, const Matrix& x);

/// Activations feeding the head.
Matrix features(const ParameterSet& params, const Matrix& x);

Matrix softmax_rows(const Matrix& logits);

/// Mean cross-entropy with a stable log-sum-exp.
double cross_entropy(const Matrix& logits, std::span<const int> labels);

/// Fraction of rows whose argmax equals the label; rows with non-finite
/// logits count as errors.
double accuracy(const Matrix& logits, std::span<const int> labels);

struct LossAndGrad {
  double loss = 0.0;
  ParameterSet grads;
};

/// Mean cross-entropy and its exact gradient, computed on the tape.
LossAndGrad loss_and_grad(const ParameterSet& params, const Matrix& x, std::span<const int> labels);

std::string layer_name(std::size_t index, std::size_t layer_count);

}  // namespace metadiv::nnet
