#pragma once

#include "metadiv/nnet/mlp.hpp"

#include <cstdint>
#include <filesystem>

#include <json.hpp>

namespace metadiv::nnet {

struct Checkpoint {
  MlpConfig config;
  ParameterSet params;
  std::uint64_t seed = 0;
  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json to_json(const MlpConfig& config);
MlpConfig mlp_config_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

/// Doubles are written in shortest round-trip form (at most 17 significant digits).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace metadiv::nnet
