#pragma once

#include "metadiv/gaussbench/benchmark.hpp"
#include "metadiv/metalearn/adaptation.hpp"
#include "metadiv/metalearn/trainers.hpp"
#include "metadiv/nnet/mlp.hpp"
#include "metadiv/repsim/distances.hpp"
#include "metadiv/task2vec/probe.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace metadiv::harness {

enum class Experiment { div_sweep, train, eval_matrix, repsim, pathology, correlate, histogram };

std::string_view to_string(Experiment e);
Experiment experiment_from_string(std::string_view name);
/// CLI subcommand of an experiment ("div-sweep", "train", "eval", ...).
std::string_view subcommand_of(Experiment e);
Experiment experiment_from_subcommand(std::string_view subcommand);

/// Raised for malformed configs; the CLI maps it to a usage error.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
  const char* kind() const noexcept override { return "config"; }
};

struct Seeds {
  std::uint64_t benchmark = 1;
  std::uint64_t train = 2;
  std::uint64_t eval = 3;
  std::uint64_t probe = 4;

  /// benchmark = base, train = base + 1, eval = base + 2, probe = base + 3.
  static Seeds from_base(std::uint64_t base);
};

struct DivSweepConfig {
  std::size_t n_pairs = 100000;
  std::size_t n_tasks = 100;
  std::size_t n_mc = 5;
  task2vec::ProbeOptions probe;
  gaussbench::Split split = gaussbench::Split::meta_test;
  bool write_heatmaps = true;
};

struct TrainConfig {
  std::vector<std::string> methods{"maml", "usl"};
  metalearn::MamlConfig maml;
  metalearn::UslConfig usl;
};

struct BenchmarkCheckpoints {
  gaussbench::BenchmarkSpec spec;
  std::optional<std::filesystem::path> maml;
  std::optional<std::filesystem::path> usl;
};

struct EvalConfig {
  std::vector<BenchmarkCheckpoints> benchmarks;  // empty: one entry per spec, trained inline
  bool train_inline = false;
  std::vector<metalearn::AdaptationMethod> methods;
  std::size_t n_tasks = 500;
  gaussbench::Split split = gaussbench::Split::meta_test;
};

struct RepsimSide {
  std::filesystem::path checkpoint;
  metalearn::AdaptationMethod adaptation;
  std::optional<std::filesystem::path> head_init_checkpoint;
};

struct RepsimConfig {
  RepsimSide a;
  RepsimSide b;
  std::size_t n_tasks = 20;
  std::vector<repsim::Metric> metrics{repsim::kAllMetrics.begin(), repsim::kAllMetrics.end()};
  repsim::SafetyPolicy safety;
  gaussbench::Split split = gaussbench::Split::meta_test;
};

struct PathologyConfig {
  std::vector<std::size_t> dims{16, 64, 300};
  std::vector<std::size_t> n_points{300, 1280};
  std::size_t seeds = 10;
};

struct CorrelateConfig {
  std::filesystem::path sweep_csv;
};

struct HistogramConfig {
  std::size_t n_tasks = 100;
  std::size_t n_bins = 20;
  std::size_t n_mc = 5;
  task2vec::ProbeOptions probe;
  gaussbench::Split split = gaussbench::Split::meta_test;
};

struct RunConfig {
  Experiment experiment = Experiment::div_sweep;
  Seeds seeds;
  std::vector<gaussbench::BenchmarkSpec> specs;
  nnet::MlpConfig model;
  gaussbench::TaskShape shape;
  std::optional<std::filesystem::path> output_dir;
  /// Directory of the config file; relative paths inside it resolve here.
  std::filesystem::path base_dir;

  DivSweepConfig div_sweep;
  TrainConfig train;
  EvalConfig eval;
  RepsimConfig repsim;
  PathologyConfig pathology;
  CorrelateConfig correlate;
  HistogramConfig histogram;

  nlohmann::json source;  // the parsed JSON, echoed into the manifest

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// Parses and validates a config. `expected`, when given, must match the
/// "experiment" field if the config has one.
RunConfig parse_config(const nlohmann::json& j, std::optional<Experiment> expected = std::nullopt,
                       const std::filesystem::path& base_dir = {});

RunConfig load_config(const std::filesystem::path& path,
                      std::optional<Experiment> expected = std::nullopt);

nlohmann::json spec_to_json(const gaussbench::BenchmarkSpec& spec);
gaussbench::BenchmarkSpec spec_from_json(const nlohmann::json& j);

}  // namespace metadiv::harness
