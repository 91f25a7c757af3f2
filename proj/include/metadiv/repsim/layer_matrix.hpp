#pragma once

#include "metadiv/numerics/matrix.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

namespace metadiv::repsim {

enum class ReshapeMode { plain, channels_as_features, activations_as_features };

std::string_view to_string(ReshapeMode mode);
ReshapeMode reshape_mode_from_string(std::string_view name);

/// Activations of one layer: rows are (effective) examples, columns are
/// (effective) features, i.e. neuron vectors.
struct LayerMatrix {
  Matrix matrix;
  std::string layer_name;
  std::string source_model;
  ReshapeMode reshape_mode = ReshapeMode::plain;

  std::size_t examples() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t features() const { return static_cast<std::size_t>(matrix.cols()); }
};

/// Validates shape (N, D >= 1) and finiteness.
LayerMatrix make_layer_matrix(Matrix m, std::string layer_name = {},
                              std::string source_model = {},
                              ReshapeMode mode = ReshapeMode::plain);

/// Examples-to-features requirements for correlation-based metrics.
struct SafetyPolicy {
  double safety_factor = 10.0;
  std::size_t subsample_multiplier = 20;

  void validate() const;
};

/// The literal margin inequality: n_features <= s * n_examples.
bool safety_margin_ok(std::size_t n_examples, std::size_t n_features,
                      const SafetyPolicy& policy = {});

/// True when there are fewer than s examples per feature, the regime in which
/// CCA-style similarities drift toward a spurious 1.
bool safety_margin_risky(std::size_t n_examples, std::size_t n_features,
                         const SafetyPolicy& policy = {});

/// Fixture IO: `csv_path` holds the headerless matrix and `csv_path` with a
/// `.json` extension holds {layer_name, source_model, reshape_mode, n, d}.
LayerMatrix load_layer_matrix(const std::filesystem::path& csv_path);
void save_layer_matrix(const std::filesystem::path& csv_path, const LayerMatrix& layer);

}  // namespace metadiv::repsim
