#include "metadiv/metalearn/evaluation.hpp"

#include "metadiv/error.hpp"
#include "metadiv/gaussbench/bayes.hpp"
#include "metadiv/numerics/csv.hpp"
#include "metadiv/numerics/parallel.hpp"

#include <cmath>

namespace metadiv::metalearn {

EvalResult meta_test(const nnet::ParameterSet& params, std::span<const gaussbench::FewShotTask> tasks,
                     const AdaptationMethod& method, const RngStream& rng,
                     const std::optional<nnet::DenseLayer>& head_init, std::string init_label) {
  if (tasks.size() < 2) throw InsufficientData("meta_test: need at least 2 tasks");
  method.validate();
  std::vector<double> acc(tasks.size());
  std::vector<double> loss(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    const auto& task = tasks[i];
    RngStream head_rng = rng.split(i);
    const nnet::ParameterSet adapted =
        adapt(params, task.support_x, task.support_y, task.n_way(), method, head_init, head_rng);
    const Matrix z = nnet::logits(adapted, task.query_x);
    acc[i] = nnet::accuracy(z, task.query_y);
    loss[i] = nnet::cross_entropy(z, task.query_y);
  });
  EvalResult out;
  out.init_label = std::move(init_label);
  out.adaptation = method;
  const numerics::MeanCi stats = numerics::mean_ci95(acc);
  out.accuracy = stats.mean;
  out.ci95 = stats.halfwidth;
  out.n_tasks = tasks.size();
  double total = 0.0;
  for (double l : loss) total += l;
  out.loss = total / static_cast<double>(loss.size());
  out.per_task = std::move(acc);
  return out;
}

EvalResult meta_test(const nnet::ParameterSet& params, const gaussbench::Benchmark& bench,
                     gaussbench::Split split, const AdaptationMethod& method, std::size_t n_tasks,
                     const RngStream& rng, const gaussbench::TaskShape& shape,
                     const std::optional<nnet::DenseLayer>& head_init, std::string init_label) {
  const auto tasks = gaussbench::sample_tasks(bench.split(split), shape, n_tasks, rng.split(0));
  return meta_test(params, tasks, method, rng.split(1), head_init, std::move(init_label));
}

std::vector<EvalResult> eval_matrix(std::span<const NamedInit> inits,
                                    std::span<const AdaptationMethod> methods,
                                    std::span<const gaussbench::FewShotTask> tasks,
                                    const RngStream& rng) {
  if (inits.empty() || methods.empty()) throw InvalidInput("eval_matrix: nothing to evaluate");
  std::vector<EvalResult> rows;
  for (const auto& init : inits) {
    for (const auto& method : methods) {
      rows.push_back(meta_test(init.params, tasks, method, rng, init.head_init, init.label));
    }
  }
  return rows;
}

numerics::MeanCi bayes_bound(std::span<const gaussbench::FewShotTask> tasks, std::size_t n_mc,
                             const RngStream& rng) {
  if (tasks.size() < 2) throw InsufficientData("bayes_bound: need at least 2 tasks");
  std::vector<double> acc(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    RngStream r = rng.split(i);
    acc[i] = gaussbench::bayes_accuracy(tasks[i], n_mc, r).mean;
  });
  return numerics::mean_ci95(acc);
}

Comparison compare(const EvalResult& a, const EvalResult& b) {
  Comparison c;
  c.difference = a.accuracy - b.accuracy;
  c.combined_ci = a.ci95 + b.ci95;
  c.overlap = std::abs(c.difference) <= c.combined_ci;
  return c;
}

void write_eval_csv(const std::filesystem::path& path, std::span<const EvalResult> rows) {
  numerics::CsvTable table;
  table.header = {"init", "adaptation", "accuracy", "ci95", "n_tasks"};
  for (const auto& r : rows) {
    table.rows.push_back({r.init_label, r.adaptation.label(), numerics::format_double(r.accuracy),
                          numerics::format_double(r.ci95), std::to_string(r.n_tasks)});
  }
  numerics::write_csv_table(path, table);
}

}  // namespace metadiv::metalearn
