#include "metadiv/nnet/checkpoint.hpp"

#include "metadiv/error.hpp"

#include <fstream>
#include <sstream>

namespace metadiv::nnet {

nlohmann::json to_json(const MlpConfig& config) {
  return {{"input_size", config.input_size},
          {"hidden_sizes", config.hidden_sizes},
          {"output_size", config.output_size},
          {"activation", "relu"}};
}

MlpConfig mlp_config_from_json(const nlohmann::json& j) {
  MlpConfig c;
  c.input_size = j.value("input_size", c.input_size);
  c.hidden_sizes = j.value("hidden_sizes", c.hidden_sizes);
  c.output_size = j.value("output_size", c.output_size);
  if (j.value("activation", std::string("relu")) != "relu") {
    throw InvalidInput("mlp config: unsupported activation");
  }
  c.validate();
  return c;
}

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : ckpt.params.layers) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      std::vector<double> row(layer.weight.row(r).begin(), layer.weight.row(r).end());
      rows.push_back(row);
    }
    std::vector<double> bias(layer.bias.begin(), layer.bias.end());
    layers.push_back({{"weights", rows}, {"bias", bias}});
  }
  return {{"mlp_config", to_json(ckpt.config)},
          {"seed", ckpt.seed},
          {"layers", layers},
          {"metadata", ckpt.metadata}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    Checkpoint ckpt;
    ckpt.config = mlp_config_from_json(j.at("mlp_config"));
    ckpt.seed = j.value("seed", std::uint64_t{0});
    ckpt.metadata = j.value("metadata", nlohmann::json::object());
    for (const auto& lj : j.at("layers")) {
      const auto& rows = lj.at("weights");
      const auto bias = lj.at("bias").get<std::vector<double>>();
      DenseLayer layer;
      const auto in = static_cast<Eigen::Index>(rows.size());
      const auto out = static_cast<Eigen::Index>(bias.size());
      layer.weight.resize(in, out);
      for (Eigen::Index r = 0; r < in; ++r) {
        const auto row = rows[static_cast<std::size_t>(r)].get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != out) {
          throw InvalidInput("checkpoint: ragged weight matrix");
        }
        for (Eigen::Index c = 0; c < out; ++c) layer.weight(r, c) = row[static_cast<std::size_t>(c)];
      }
      layer.bias = Eigen::Map<const RowVector>(bias.data(), out);
      ckpt.params.layers.push_back(std::move(layer));
    }
    if (!(config_of(ckpt.params) == ckpt.config)) {
      throw InvalidInput("checkpoint: layer shapes disagree with mlp_config");
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("checkpoint: malformed JSON: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  // nlohmann emits the shortest round-trip representation of each double.
  out << checkpoint_to_json(ckpt).dump(1) << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace metadiv::nnet
