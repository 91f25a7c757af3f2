#include "metadiv/repsim/layer_matrix.hpp"

#include "metadiv/error.hpp"
#include "metadiv/numerics/csv.hpp"

#include <json.hpp>

#include <fstream>

namespace metadiv::repsim {

std::string_view to_string(ReshapeMode mode) {
  switch (mode) {
    case ReshapeMode::plain:
      return "plain";
    case ReshapeMode::channels_as_features:
      return "channels_as_features";
    case ReshapeMode::activations_as_features:
      return "activations_as_features";
  }
  return "plain";
}

ReshapeMode reshape_mode_from_string(std::string_view name) {
  if (name == "plain") return ReshapeMode::plain;
  if (name == "channels_as_features") return ReshapeMode::channels_as_features;
  if (name == "activations_as_features") return ReshapeMode::activations_as_features;
  throw InvalidInput("unknown reshape mode '" + std::string(name) + "'");
}

LayerMatrix make_layer_matrix(Matrix m, std::string layer_name, std::string source_model,
                              ReshapeMode mode) {
  if (m.rows() < 1 || m.cols() < 1) throw InvalidInput("layer matrix must be at least 1x1");
  numerics::require_finite(m, "layer matrix");
  return {std::move(m), std::move(layer_name), std::move(source_model), mode};
}

void SafetyPolicy::validate() const {
  if (!(safety_factor >= 1.0)) throw InvalidInput("safety factor must be >= 1");
  if (subsample_multiplier < 1) throw InvalidInput("subsample multiplier must be >= 1");
}

bool safety_margin_ok(std::size_t n_examples, std::size_t n_features, const SafetyPolicy& policy) {
  policy.validate();
  if (n_examples < 1 || n_features < 1) throw InvalidInput("safety_margin_ok: counts must be >= 1");
  return static_cast<double>(n_features) <= policy.safety_factor * static_cast<double>(n_examples);
}

bool safety_margin_risky(std::size_t n_examples, std::size_t n_features,
                         const SafetyPolicy& policy) {
  policy.validate();
  return static_cast<double>(n_examples) < policy.safety_factor * static_cast<double>(n_features);
}

LayerMatrix load_layer_matrix(const std::filesystem::path& csv_path) {
  Matrix m = numerics::read_matrix_csv(csv_path);
  auto sidecar = csv_path;
  sidecar.replace_extension(".json");
  std::ifstream in(sidecar);
  if (!in) throw IoError("missing layer manifest " + sidecar.string());
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("malformed layer manifest " + sidecar.string() + ": " + e.what());
  }
  const auto n = meta.at("n").get<std::size_t>();
  const auto d = meta.at("d").get<std::size_t>();
  if (n != static_cast<std::size_t>(m.rows()) || d != static_cast<std::size_t>(m.cols())) {
    throw InvalidInput("layer manifest " + sidecar.string() + " disagrees with matrix shape");
  }
  return make_layer_matrix(std::move(m), meta.value("layer_name", ""),
                           meta.value("source_model", ""),
                           reshape_mode_from_string(meta.value("reshape_mode", "plain")));
}

void save_layer_matrix(const std::filesystem::path& csv_path, const LayerMatrix& layer) {
  numerics::write_matrix_csv(csv_path, layer.matrix);
  auto sidecar = csv_path;
  sidecar.replace_extension(".json");
  nlohmann::ordered_json meta;
  meta["layer_name"] = layer.layer_name;
  meta["source_model"] = layer.source_model;
  meta["reshape_mode"] = std::string(to_string(layer.reshape_mode));
  meta["n"] = layer.examples();
  meta["d"] = layer.features();
  std::ofstream out(sidecar, std::ios::binary);
  if (!out) throw IoError("cannot write " + sidecar.string());
  out << meta.dump(2) << '\n';
}

}  // namespace metadiv::repsim
