#pragma once

#include "metadiv/error.hpp"
#include "metadiv/gaussbench/benchmark.hpp"
#include "metadiv/nnet/adam.hpp"
#include "metadiv/nnet/mlp.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace metadiv::metalearn {

struct CurvePoint {
  std::size_t step = 0;  // outer iteration or epoch
  std::string split;     // "meta_train" / "meta_val"
  double loss = 0.0;
  double accuracy = 0.0;
};

struct LearningCurve {
  std::vector<CurvePoint> points;

  std::vector<CurvePoint> of_split(std::string_view split) const;
};

/// CSV with columns iteration_or_epoch, split, loss, accuracy.
void write_curve_csv(const std::filesystem::path& path, const LearningCurve& curve);

/// Accuracy plateau: the best validation accuracy inside the final
/// `window_fraction` of the budget improves on the best before it by at most
/// `min_improvement`.
struct ConvergenceRule {
  double min_improvement = 0.002;
  double window_fraction = 0.2;
};

bool plateaued(const LearningCurve& curve, std::size_t budget, const ConvergenceRule& rule = {},
               std::string_view split = "meta_val");

struct MamlConfig {
  double inner_lr = 0.1;
  std::size_t inner_steps = 5;
  std::size_t meta_batch = 100;
  nnet::AdamConfig outer;
  bool second_order = true;
  std::size_t iterations = 14000;
  std::size_t eval_interval = 500;
  std::size_t eval_tasks = 100;
  gaussbench::TaskShape shape;

  void validate() const;
};

struct UslConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 100;
  nnet::AdamConfig adam;
  std::size_t eval_interval = 5;
  std::size_t eval_tasks = 100;
  gaussbench::TaskShape shape;

  void validate() const;
};

struct TrainResult {
  nnet::ParameterSet params;
  LearningCurve curve;
  bool converged = false;
};

/// Loss or parameters became non-finite. Carries the last finite parameters.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, nnet::ParameterSet last_good, std::size_t step,
                   LearningCurve curve)
      : Error(what), last_good_(std::move(last_good)), step_(step), curve_(std::move(curve)) {}
  const char* kind() const noexcept override { return "training_diverged"; }
  const nnet::ParameterSet& last_good() const noexcept { return last_good_; }
  std::size_t step() const noexcept { return step_; }
  const LearningCurve& curve() const noexcept { return curve_; }

 private:
  nnet::ParameterSet last_good_;
  std::size_t step_;
  LearningCurve curve_;
};

/// Called after every outer iteration / epoch with the step count.
using ProgressFn = std::function<void(std::size_t step, const LearningCurve& curve)>;

/// Second-order (unless disabled) MAML on the meta-train split. The
/// initialization uses rng.split(0), outer iteration t samples its meta-batch
/// from rng.split(1).split(t), and validation tasks come from rng.split(2).
TrainResult maml_train(const gaussbench::Benchmark& bench, const nnet::MlpConfig& model,
                       const MamlConfig& config, const RngStream& rng,
                       const ProgressFn& progress = {});

/// Cross-entropy training over the union of all meta-train classes with a head
/// as wide as the meta-train split. Same stream layout as maml_train, with
/// epoch e shuffled by rng.split(1).split(e).
TrainResult usl_train(const gaussbench::Benchmark& bench, const nnet::MlpConfig& model,
                      const UslConfig& config, const RngStream& rng,
                      const ProgressFn& progress = {});

}  // namespace metadiv::metalearn
