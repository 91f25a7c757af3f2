#pragma once

#include "metadiv/nnet/mlp.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace metadiv::task2vec {

/// Batch standardization applied inside the probe, using statistics of the
/// batch being embedded (a task's combined set). Statistics are treated as
/// constants when differentiating.
enum class ProbeNorm { none, input, all_layers };

std::string_view to_string(ProbeNorm norm);
ProbeNorm probe_norm_from_string(std::string_view name);

/// How probe biases are drawn. `zero` mirrors init_mlp; `uniform_fan_in` draws
/// biases from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
enum class ProbeBias { zero, uniform_fan_in };

std::string_view to_string(ProbeBias bias);
ProbeBias probe_bias_from_string(std::string_view name);

/// Activations of one probe layer for a batch.
struct ProbeLayerTrace {
  Matrix input;          // batch x fan_in, after any input standardization
  Matrix pre;            // batch x width, after standardization when enabled
  RowVector inv_scale;   // d pre / d (raw pre-activation), per column
};

/// Fixed random feature extractor shared by every task embedding. The task
/// head is fit separately per task; `config.output_size` is only a default.
class ProbeNetwork {
 public:
  /// `feature_params` holds every layer before the head.
  ProbeNetwork(nnet::MlpConfig config, nnet::ParameterSet feature_params, std::uint64_t probe_seed,
               ProbeNorm norm = ProbeNorm::none);

  const nnet::MlpConfig& config() const noexcept { return config_; }
  const nnet::ParameterSet& feature_params() const noexcept { return feature_params_; }
  std::uint64_t probe_seed() const noexcept { return probe_seed_; }
  ProbeNorm norm() const noexcept { return norm_; }
  std::size_t feature_parameter_count() const { return feature_params_.parameter_count(); }
  std::size_t feature_dim() const;

  /// Penultimate activations for a batch of inputs.
  Matrix features(const Matrix& x) const;

  /// Per-layer trace; the last layer's relu(pre) equals features(x).
  std::vector<ProbeLayerTrace> trace(const Matrix& x) const;

 private:
  nnet::MlpConfig config_;
  nnet::ParameterSet feature_params_;
  std::uint64_t probe_seed_;
  ProbeNorm norm_;
};

struct ProbeOptions {
  ProbeBias bias = ProbeBias::zero;
  ProbeNorm norm = ProbeNorm::input;
};

ProbeNetwork make_probe(const nnet::MlpConfig& config, std::uint64_t seed,
                        const ProbeOptions& options = {});

}  // namespace metadiv::task2vec
