#pragma once

#include "metadiv/harness/config.hpp"
#include "metadiv/harness/manifest.hpp"
#include "metadiv/metalearn/evaluation.hpp"
#include "metadiv/metalearn/model_distance.hpp"
#include "metadiv/repsim/pathology.hpp"
#include "metadiv/task2vec/diversity.hpp"

#include <filesystem>
#include <vector>

namespace metadiv::harness {

/// Every experiment writes its files into `manifest.output_dir()` and registers
/// them with the manifest. Benchmarks for every spec share the stream
/// (seeds.benchmark, 0), so a sweep compares rescaled versions of the same
/// draws.

struct SweepRow {
  gaussbench::BenchmarkSpec spec;
  double hellinger_div = 0.0;
  double hellinger_ci = 0.0;
  double task2vec_div = 0.0;
  double task2vec_ci = 0.0;
  std::size_t n_pairs = 0;  // task pairs behind the task2vec estimate
};

std::vector<SweepRow> run_div_sweep(const RunConfig& config, RunManifest& manifest);

struct CorrelationReport {
  double pearson_r = 0.0;
  double spearman_rho = 0.0;
  /// Pearson r after cyclically shifting the task2vec column by one row.
  double shifted_pearson_r = 0.0;
  std::size_t n_rows = 0;
};

CorrelationReport correlate_sweep(const std::filesystem::path& sweep_csv);
CorrelationReport run_correlate(const RunConfig& config, RunManifest& manifest);

struct TrainedModels {
  std::optional<nnet::ParameterSet> maml;
  std::optional<nnet::ParameterSet> usl;
};

/// Trains the configured methods on every spec; writes checkpoints and curves.
std::vector<TrainedModels> run_train(const RunConfig& config, RunManifest& manifest);

struct GapRow {
  double sigma_m = 0.0;
  double acc_usl_headlr = 0.0;
  double acc_maml5 = 0.0;
  double gap = 0.0;
  double combined_ci = 0.0;
  bool overlap = false;
};

struct EvalReport {
  std::vector<std::vector<metalearn::EvalResult>> matrices;  // one per benchmark
  std::vector<GapRow> gaps;
};

EvalReport run_eval_matrix(const RunConfig& config, RunManifest& manifest);

std::vector<metalearn::LayerDistanceRow> run_repsim(const RunConfig& config, RunManifest& manifest);

std::vector<repsim::PathologyCell> run_pathology(const RunConfig& config, RunManifest& manifest);

struct HistogramReport {
  std::vector<task2vec::HistogramBin> bins;
  double fraction_within_2sd = 0.0;
  double diversity = 0.0;
};

std::vector<HistogramReport> run_histogram(const RunConfig& config, RunManifest& manifest);

/// Dispatches on config.experiment.
void run_experiment(const RunConfig& config, RunManifest& manifest);

}  // namespace metadiv::harness
