#include "metadiv/metalearn/trainers.hpp"

#include "metadiv/metalearn/evaluation.hpp"
#include "metadiv/nnet/inner_loop.hpp"
#include "metadiv/numerics/csv.hpp"
#include "metadiv/numerics/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace metadiv::metalearn {
namespace {

bool finite(double x) { return std::isfinite(x); }

void accumulate(nnet::ParameterSet& into, const nnet::ParameterSet& g) {
  for (std::size_t l = 0; l < into.layers.size(); ++l) {
    into.layers[l].weight += g.layers[l].weight;
    into.layers[l].bias += g.layers[l].bias;
  }
}

void scale(nnet::ParameterSet& p, double s) {
  for (auto& layer : p.layers) {
    layer.weight *= s;
    layer.bias *= s;
  }
}

}  // namespace

std::vector<CurvePoint> LearningCurve::of_split(std::string_view split) const {
  std::vector<CurvePoint> out;
  for (const auto& p : points) {
    if (p.split == split) out.push_back(p);
  }
  return out;
}

void write_curve_csv(const std::filesystem::path& path, const LearningCurve& curve) {
  numerics::CsvTable table;
  table.header = {"iteration_or_epoch", "split", "loss", "accuracy"};
  for (const auto& p : curve.points) {
    table.rows.push_back({std::to_string(p.step), p.split, numerics::format_double(p.loss),
                          numerics::format_double(p.accuracy)});
  }
  numerics::write_csv_table(path, table);
}

bool plateaued(const LearningCurve& curve, std::size_t budget, const ConvergenceRule& rule,
               std::string_view split) {
  const auto points = curve.of_split(split);
  const double window_start = static_cast<double>(budget) * (1.0 - rule.window_fraction);
  double before = -1.0;
  double inside = -1.0;
  for (const auto& p : points) {
    if (static_cast<double>(p.step) < window_start) {
      before = std::max(before, p.accuracy);
    } else {
      inside = std::max(inside, p.accuracy);
    }
  }
  if (before < 0.0 || inside < 0.0) return false;
  return inside - before <= rule.min_improvement;
}

void MamlConfig::validate() const {
  if (inner_steps < 1) throw InvalidInput("maml: inner_steps must be at least 1");
  if (!(inner_lr > 0.0)) throw InvalidInput("maml: inner_lr must be positive");
  if (meta_batch < 1) throw InvalidInput("maml: meta_batch must be at least 1");
  if (eval_interval < 1) throw InvalidInput("maml: eval_interval must be at least 1");
  if (eval_tasks < 2) throw InvalidInput("maml: eval_tasks must be at least 2");
}

void UslConfig::validate() const {
  if (batch_size < 1) throw InvalidInput("usl: batch_size must be at least 1");
  if (eval_interval < 1) throw InvalidInput("usl: eval_interval must be at least 1");
  if (eval_tasks < 2) throw InvalidInput("usl: eval_tasks must be at least 2");
}

TrainResult maml_train(const gaussbench::Benchmark& bench, const nnet::MlpConfig& model,
                       const MamlConfig& config, const RngStream& rng, const ProgressFn& progress) {
  config.validate();
  nnet::MlpConfig cfg = model;
  cfg.output_size = config.shape.n_way;
  cfg.validate();
  RngStream init_rng = rng.split(0);
  TrainResult result;
  result.params = nnet::init_mlp(cfg, init_rng);
  nnet::AdamState adam = nnet::make_adam(result.params, config.outer);

  const auto train_classes = bench.split(gaussbench::Split::meta_train);
  const auto val_tasks = gaussbench::sample_tasks(bench.split(gaussbench::Split::meta_val),
                                                  config.shape, config.eval_tasks, rng.split(2));
  const AdaptationMethod val_method = AdaptationMethod::maml(config.inner_steps, config.inner_lr);
  auto validate_now = [&](std::size_t step) {
    const EvalResult ev = meta_test(result.params, val_tasks, val_method, rng.split(3));
    result.curve.points.push_back({step, "meta_val", ev.loss, ev.accuracy});
  };
  validate_now(0);

  double loss_sum = 0.0;
  double acc_sum = 0.0;
  std::size_t logged = 0;
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    const auto tasks =
        gaussbench::sample_tasks(train_classes, config.shape, config.meta_batch, rng.split(1).split(it));
    std::vector<nnet::MetaGradient> grads(tasks.size());
    parallel_for(tasks.size(), [&](std::size_t i) {
      const auto& t = tasks[i];
      grads[i] = nnet::maml_task_gradient(result.params, t.support_x, t.support_y, t.query_x,
                                          t.query_y, config.inner_steps, config.inner_lr,
                                          config.second_order);
    });
    nnet::ParameterSet mean = result.params.zeros_like();
    double loss = 0.0;
    double acc = 0.0;
    for (const auto& g : grads) {
      accumulate(mean, g.grads);
      loss += g.query_loss;
      acc += g.query_accuracy;
    }
    const double inv = 1.0 / static_cast<double>(grads.size());
    scale(mean, inv);
    loss *= inv;
    acc *= inv;
    nnet::ParameterSet next = result.params;
    nnet::adam_step(adam, next, mean);
    if (!finite(loss) || !mean.all_finite() || !next.all_finite()) {
      throw TrainingDiverged("maml_train: non-finite loss or parameters at iteration " +
                                 std::to_string(it),
                             result.params, it, result.curve);
    }
    result.params = std::move(next);
    loss_sum += loss;
    acc_sum += acc;
    ++logged;
    if (it % config.eval_interval == 0 || it == config.iterations) {
      result.curve.points.push_back({it, "meta_train", loss_sum / static_cast<double>(logged),
                                     acc_sum / static_cast<double>(logged)});
      loss_sum = acc_sum = 0.0;
      logged = 0;
      validate_now(it);
    }
    if (progress) progress(it, result.curve);
  }
  result.converged = plateaued(result.curve, config.iterations);
  return result;
}

TrainResult usl_train(const gaussbench::Benchmark& bench, const nnet::MlpConfig& model,
                      const UslConfig& config, const RngStream& rng, const ProgressFn& progress) {
  config.validate();
  const auto classes = bench.split(gaussbench::Split::meta_train);
  nnet::MlpConfig cfg = model;
  cfg.output_size = classes.size();
  cfg.validate();

  std::size_t total = 0;
  for (const auto& c : classes) total += c.points.size();
  Matrix x(static_cast<Eigen::Index>(total), 1);
  std::vector<int> y(total);
  {
    std::size_t row = 0;
    for (std::size_t k = 0; k < classes.size(); ++k) {
      for (double v : classes[k].points) {
        x(static_cast<Eigen::Index>(row), 0) = v;
        y[row++] = static_cast<int>(k);
      }
    }
  }

  RngStream init_rng = rng.split(0);
  TrainResult result;
  result.params = nnet::init_mlp(cfg, init_rng);
  nnet::AdamState adam = nnet::make_adam(result.params, config.adam);

  const auto val_tasks = gaussbench::sample_tasks(bench.split(gaussbench::Split::meta_val),
                                                  config.shape, config.eval_tasks, rng.split(2));
  auto validate_now = [&](std::size_t epoch) {
    const EvalResult ev =
        meta_test(result.params, val_tasks, AdaptationMethod::head_lr(), rng.split(3));
    result.curve.points.push_back({epoch, "meta_val", ev.loss, ev.accuracy});
  };
  validate_now(0);

  std::vector<std::size_t> order(total);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngStream shuffle = rng.split(1).split(epoch);
    for (std::size_t i = total; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double loss_sum = 0.0;
    double correct = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < total; start += config.batch_size) {
      const std::size_t end = std::min(total, start + config.batch_size);
      const auto rows = static_cast<Eigen::Index>(end - start);
      Matrix bx(rows, 1);
      std::vector<int> by(end - start);
      for (std::size_t i = start; i < end; ++i) {
        bx(static_cast<Eigen::Index>(i - start), 0) = x(static_cast<Eigen::Index>(order[i]), 0);
        by[i - start] = y[order[i]];
      }
      const nnet::LossAndGrad lg = nnet::loss_and_grad(result.params, bx, by);
      nnet::ParameterSet next = result.params;
      nnet::adam_step(adam, next, lg.grads);
      if (!finite(lg.loss) || !next.all_finite()) {
        throw TrainingDiverged("usl_train: non-finite loss or parameters in epoch " +
                                   std::to_string(epoch),
                               result.params, epoch, result.curve);
      }
      // Accuracy of the batch under the parameters the loss was computed with.
      correct += nnet::accuracy(nnet::logits(result.params, bx), by) * static_cast<double>(rows);
      result.params = std::move(next);
      loss_sum += lg.loss;
      ++batches;
    }
    result.curve.points.push_back({epoch, "meta_train", loss_sum / static_cast<double>(batches),
                                   correct / static_cast<double>(total)});
    if (epoch % config.eval_interval == 0 || epoch == config.epochs) validate_now(epoch);
    if (progress) progress(epoch, result.curve);
  }
  result.converged = plateaued(result.curve, config.epochs);
  return result;
}

}  // namespace metadiv::metalearn
