#include "metadiv/metalearn/model_distance.hpp"

#include "metadiv/error.hpp"
#include "metadiv/numerics/csv.hpp"
#include "metadiv/numerics/parallel.hpp"
#include "metadiv/numerics/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace metadiv::metalearn {
namespace {

Matrix evaluation_batch(const gaussbench::FewShotTask& task, const gaussbench::Benchmark& bench,
                        std::size_t batch_size, RngStream& rng) {
  const std::size_t n_way = task.n_way();
  const std::size_t per_way = (batch_size + n_way - 1) / n_way;
  Matrix x(static_cast<Eigen::Index>(per_way * n_way), 1);
  Eigen::Index row = 0;
  for (const auto& way : task.ways) {
    if (way.class_id >= bench.classes.size()) throw InvalidInput("evaluation batch: unknown class");
    const auto& pool = bench.classes[way.class_id].points;
    if (per_way > pool.size()) throw InsufficientData("evaluation batch larger than class pool");
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < per_way; ++i) {
      std::swap(idx[i], idx[i + rng.below(pool.size() - i)]);
      x(row++, 0) = pool[idx[i]];
    }
  }
  return x;
}

}  // namespace

std::size_t evaluation_batch_size(const nnet::ParameterSet& params, std::size_t n_way,
                                  double multiplier) {
  Eigen::Index widest = 0;
  for (const auto& layer : params.layers) widest = std::max(widest, layer.weight.cols());
  const auto want = static_cast<std::size_t>(std::ceil(multiplier * static_cast<double>(widest)));
  return (want + n_way - 1) / n_way * n_way;
}

std::vector<LayerDistanceRow> layerwise_model_distance(
    const ModelSide& a, const ModelSide& b, std::span<const gaussbench::FewShotTask> tasks,
    const gaussbench::Benchmark& bench, std::span<const repsim::Metric> metrics,
    const repsim::SafetyPolicy& policy, const RngStream& rng, std::size_t batch_size) {
  if (tasks.size() < 2) throw InsufficientData("layerwise_model_distance: need at least 2 tasks");
  if (metrics.empty()) throw InvalidInput("layerwise_model_distance: no metrics");
  if (a.params.layers.size() != b.params.layers.size()) {
    throw InvalidInput("layerwise_model_distance: architectures differ");
  }
  for (std::size_t l = 0; l + 1 < a.params.layers.size(); ++l) {
    if (a.params.layers[l].weight.rows() != b.params.layers[l].weight.rows() ||
        a.params.layers[l].weight.cols() != b.params.layers[l].weight.cols()) {
      throw InvalidInput("layerwise_model_distance: architectures differ");
    }
  }
  policy.validate();
  const std::size_t n_layers = a.params.layers.size();
  const std::size_t n_metrics = metrics.size();

  struct Cell {
    double distance = 0.0;
    bool risky = false;
  };
  std::vector<std::vector<Cell>> cells(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    const auto& task = tasks[i];
    const RngStream task_rng = rng.split(i);
    RngStream head_a = task_rng.split(0);
    RngStream head_b = task_rng.split(1);
    RngStream batch_rng = task_rng.split(2);
    const nnet::ParameterSet pa =
        adapt(a.params, task.support_x, task.support_y, task.n_way(), a.method, a.head_init, head_a);
    const nnet::ParameterSet pb =
        adapt(b.params, task.support_x, task.support_y, task.n_way(), b.method, b.head_init, head_b);
    const std::size_t size = batch_size > 0 ? batch_size
                                            : std::max(evaluation_batch_size(pa, task.n_way()),
                                                       evaluation_batch_size(pb, task.n_way()));
    const Matrix x = evaluation_batch(task, bench, size, batch_rng);
    const auto ta = nnet::forward(pa, x, a.label).trace;
    const auto tb = nnet::forward(pb, x, b.label).trace;
    std::vector<Cell> row(n_layers * n_metrics);
    for (std::size_t l = 0; l < n_layers; ++l) {
      for (std::size_t m = 0; m < n_metrics; ++m) {
        const repsim::DistanceReport rep = repsim::compare(metrics[m], ta[l], tb[l], policy);
        row[l * n_metrics + m] = {rep.distance, rep.risky};
      }
    }
    cells[i] = std::move(row);
  });

  std::vector<LayerDistanceRow> out;
  for (std::size_t l = 0; l < n_layers; ++l) {
    for (std::size_t m = 0; m < n_metrics; ++m) {
      std::vector<double> values;
      std::size_t risky = 0;
      for (const auto& row : cells) {
        values.push_back(row[l * n_metrics + m].distance);
        risky += row[l * n_metrics + m].risky ? 1 : 0;
      }
      const numerics::MeanCi stats = numerics::mean_ci95(values);
      out.push_back({nnet::layer_name(l, n_layers), metrics[m], stats.mean, stats.halfwidth,
                     values.size(), risky});
    }
  }
  return out;
}

void write_distance_csv(const std::filesystem::path& path, std::span<const LayerDistanceRow> rows) {
  numerics::CsvTable table;
  table.header = {"layer", "metric", "mean", "ci95", "n_tasks", "risky_tasks"};
  for (const auto& r : rows) {
    table.rows.push_back({r.layer, std::string(repsim::to_string(r.metric)),
                          numerics::format_double(r.mean), numerics::format_double(r.ci95),
                          std::to_string(r.n_tasks), std::to_string(r.risky_tasks)});
  }
  numerics::write_csv_table(path, table);
}

}  // namespace metadiv::metalearn
