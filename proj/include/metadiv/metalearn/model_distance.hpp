#pragma once

#include "metadiv/gaussbench/benchmark.hpp"
#include "metadiv/metalearn/adaptation.hpp"
#include "metadiv/repsim/distances.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace metadiv::metalearn {

/// One side of a model comparison: an initialization and how it is adapted to
/// each task before its activations are recorded.
struct ModelSide {
  nnet::ParameterSet params;
  AdaptationMethod method;
  std::optional<nnet::DenseLayer> head_init;
  std::string label;
};

struct LayerDistanceRow {
  std::string layer;
  repsim::Metric metric = repsim::Metric::svcca;
  double mean = 0.0;
  double ci95 = 0.0;
  std::size_t n_tasks = 0;
  std::size_t risky_tasks = 0;  // tasks whose layer matrices broke the safety margin
};

/// Evaluation batch size: `multiplier` times the widest layer, rounded up to a
/// multiple of n_way.
std::size_t evaluation_batch_size(const nnet::ParameterSet& params, std::size_t n_way,
                                  double multiplier = 10.0);

/// Adapts both sides to every task's support set, runs them on a shared
/// evaluation batch drawn from the task's class pools (rng.split(i) for task
/// i), and compares the per-layer traces. Rows are layer-major, then metric.
std::vector<LayerDistanceRow> layerwise_model_distance(
    const ModelSide& a, const ModelSide& b, std::span<const gaussbench::FewShotTask> tasks,
    const gaussbench::Benchmark& bench, std::span<const repsim::Metric> metrics,
    const repsim::SafetyPolicy& policy, const RngStream& rng, std::size_t batch_size = 0);

/// CSV with columns layer, metric, mean, ci95, n_tasks, risky_tasks.
void write_distance_csv(const std::filesystem::path& path, std::span<const LayerDistanceRow> rows);

}  // namespace metadiv::metalearn
