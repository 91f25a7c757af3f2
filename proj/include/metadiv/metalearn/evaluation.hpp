#pragma once

#include "metadiv/gaussbench/benchmark.hpp"
#include "metadiv/metalearn/adaptation.hpp"
#include "metadiv/numerics/stats.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace metadiv::metalearn {

struct EvalResult {
  std::string init_label;
  AdaptationMethod adaptation;
  double accuracy = 0.0;
  double ci95 = 0.0;
  std::size_t n_tasks = 0;
  double loss = 0.0;                 // mean query cross-entropy
  std::vector<double> per_task;      // query accuracy of every task
};

/// A labeled initialization for the evaluation matrix. `head_init` is used when
/// maml adaptation meets a head of the wrong width.
struct NamedInit {
  std::string label;
  nnet::ParameterSet params;
  std::optional<nnet::DenseLayer> head_init;
};

/// Query accuracy after adapting on each task's support set; mean and 95% CI
/// across tasks. Per-task randomness (fresh heads) comes from rng.split(i).
EvalResult meta_test(const nnet::ParameterSet& params, std::span<const gaussbench::FewShotTask> tasks,
                     const AdaptationMethod& method, const RngStream& rng,
                     const std::optional<nnet::DenseLayer>& head_init = std::nullopt,
                     std::string init_label = {});

/// Samples n_tasks episodes of `shape` from the split with rng.split(0) and
/// scores them with rng.split(1).
EvalResult meta_test(const nnet::ParameterSet& params, const gaussbench::Benchmark& bench,
                     gaussbench::Split split, const AdaptationMethod& method, std::size_t n_tasks,
                     const RngStream& rng, const gaussbench::TaskShape& shape = {},
                     const std::optional<nnet::DenseLayer>& head_init = std::nullopt,
                     std::string init_label = {});

/// Every (init, method) pair on one shared task set, init-major order.
std::vector<EvalResult> eval_matrix(std::span<const NamedInit> inits,
                                    std::span<const AdaptationMethod> methods,
                                    std::span<const gaussbench::FewShotTask> tasks,
                                    const RngStream& rng);

/// Mean Bayes-oracle accuracy of the tasks with a CI across tasks.
numerics::MeanCi bayes_bound(std::span<const gaussbench::FewShotTask> tasks, std::size_t n_mc,
                             const RngStream& rng);

/// Difference of two mean accuracies and the sum of their CI half-widths.
struct Comparison {
  double difference = 0.0;  // a - b
  double combined_ci = 0.0;
  bool overlap = false;     // |difference| <= combined_ci
};

Comparison compare(const EvalResult& a, const EvalResult& b);

/// CSV with columns init, adaptation, accuracy, ci95, n_tasks.
void write_eval_csv(const std::filesystem::path& path, std::span<const EvalResult> rows);

}  // namespace metadiv::metalearn
