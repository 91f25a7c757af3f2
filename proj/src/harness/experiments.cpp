#include "metadiv/harness/experiments.hpp"

#include "metadiv/gaussbench/hellinger.hpp"
#include "metadiv/nnet/checkpoint.hpp"
#include "metadiv/numerics/csv.hpp"
#include "metadiv/numerics/stats.hpp"

#include <cstdio>

namespace metadiv::harness {
namespace {

using numerics::format_double;

std::string spec_tag(std::size_t i) { return "spec" + std::to_string(i); }

gaussbench::Benchmark benchmark_for(const RunConfig& config, const gaussbench::BenchmarkSpec& spec) {
  return gaussbench::sample_benchmark(spec, RngStream(config.seeds.benchmark, 0));
}

void write_table(RunManifest& manifest, const std::string& name, const numerics::CsvTable& table) {
  numerics::write_csv_table(manifest.output_dir() / name, table);
  manifest.add_file(name);
}

void write_matrix(RunManifest& manifest, const std::string& name, const Matrix& m) {
  numerics::write_matrix_csv(manifest.output_dir() / name, m);
  manifest.add_file(name);
}

void log(const std::string& line) { std::fprintf(stderr, "[metadiv] %s\n", line.c_str()); }

task2vec::DiversityResult task2vec_diversity(const RunConfig& config, const gaussbench::Benchmark& bench,
                                             gaussbench::Split split, std::size_t n_tasks, std::size_t n_mc,
                                             const task2vec::ProbeOptions& probe_options) {
  nnet::MlpConfig probe_cfg = config.model;
  probe_cfg.output_size = config.shape.n_way;
  const task2vec::ProbeNetwork probe = task2vec::make_probe(probe_cfg, config.seeds.probe, probe_options);
  return task2vec::diversity_coefficient(bench.split(split), config.shape, n_tasks, probe, n_mc,
                                         RngStream(config.seeds.eval, 1));
}

nlohmann::json task_stream_note(const RunConfig& config, gaussbench::Split split) {
  return {{"benchmark_stream", {{"seed", config.seeds.benchmark}, {"stream_id", 0}}},
          {"task_stream", {{"seed", config.seeds.eval}, {"stream_id", 1}, {"split_key", 0}}},
          {"split", std::string(gaussbench::to_string(split))},
          {"rule", "task i is drawn from RngStream(seed, stream_id).split(split_key).split(i)"}};
}

nnet::Checkpoint make_checkpoint(const nnet::ParameterSet& params, std::uint64_t seed,
                                 nlohmann::json metadata) {
  nnet::Checkpoint c;
  c.config = nnet::config_of(params);
  c.params = params;
  c.seed = seed;
  c.metadata = std::move(metadata);
  return c;
}

std::optional<nnet::ParameterSet> train_one(const RunConfig& config, const std::string& method,
                                            std::size_t spec_index, const gaussbench::Benchmark& bench,
                                            RunManifest& manifest) {
  const std::string stem = method + "_" + spec_tag(spec_index);
  const std::uint64_t stream = method == "maml" ? 0 : 1;
  const RngStream rng(config.seeds.train, stream);
  nlohmann::json meta = {{"method", method},
                         {"spec", spec_to_json(bench.spec)},
                         {"benchmark_seed", config.seeds.benchmark},
                         {"train_stream", {{"seed", config.seeds.train}, {"stream_id", stream}}}};
  log("training " + stem);
  try {
    metalearn::TrainResult result;
    if (method == "maml") {
      const auto& m = config.train.maml;
      meta["iterations"] = m.iterations;
      meta["inner_lr"] = m.inner_lr;
      meta["inner_steps"] = m.inner_steps;
      meta["meta_batch"] = m.meta_batch;
      meta["second_order"] = m.second_order;
      result = metalearn::maml_train(bench, config.model, m, rng);
    } else {
      const auto& u = config.train.usl;
      meta["epochs"] = u.epochs;
      meta["batch_size"] = u.batch_size;
      result = metalearn::usl_train(bench, config.model, u, rng);
    }
    meta["converged"] = result.converged;
    manifest.notes()["converged"][stem] = result.converged;
    nnet::save_checkpoint(make_checkpoint(result.params, config.seeds.train, meta),
                          manifest.output_dir() / (stem + ".json"));
    manifest.add_file(stem + ".json");
    metalearn::write_curve_csv(manifest.output_dir() / (stem + "_curve.csv"), result.curve);
    manifest.add_file(stem + "_curve.csv");
    return result.params;
  } catch (const metalearn::TrainingDiverged& e) {
    meta["diverged_at"] = e.step();
    nnet::save_checkpoint(make_checkpoint(e.last_good(), config.seeds.train, meta),
                          manifest.output_dir() / (stem + "_last_good.json"));
    manifest.add_file(stem + "_last_good.json");
    metalearn::write_curve_csv(manifest.output_dir() / (stem + "_curve.csv"), e.curve());
    manifest.add_file(stem + "_curve.csv");
    throw;
  }
}

}  // namespace

std::vector<SweepRow> run_div_sweep(const RunConfig& config, RunManifest& manifest) {
  const auto& d = config.div_sweep;
  std::vector<SweepRow> rows;
  numerics::CsvTable table;
  table.header = {"mu_m",          "sigma_m",      "mu_s",         "sigma_s", "hellinger_div",
                  "hellinger_ci",  "task2vec_div", "task2vec_ci",  "n_pairs"};
  for (std::size_t i = 0; i < config.specs.size(); ++i) {
    const auto& spec = config.specs[i];
    log("div-sweep " + spec_tag(i) + " sigma_m=" + format_double(spec.sigma_m));
    const auto hell = gaussbench::hellinger_diversity(spec, d.n_pairs, RngStream(config.seeds.eval, 0));
    const auto bench = benchmark_for(config, spec);
    const auto div = task2vec_diversity(config, bench, d.split, d.n_tasks, d.n_mc, d.probe);
    SweepRow row{spec, hell.mean, hell.ci95, div.mean, div.ci95, div.n_pairs()};
    table.rows.push_back({format_double(spec.mu_m), format_double(spec.sigma_m), format_double(spec.mu_s),
                          format_double(spec.sigma_s), format_double(row.hellinger_div),
                          format_double(row.hellinger_ci), format_double(row.task2vec_div),
                          format_double(row.task2vec_ci), std::to_string(row.n_pairs)});
    if (d.write_heatmaps) write_matrix(manifest, "heatmap_" + spec_tag(i) + ".csv", div.pairwise);
    rows.push_back(row);
  }
  write_table(manifest, "sweep.csv", table);
  manifest.notes()["tasks"] = task_stream_note(config, d.split);
  manifest.notes()["probe"] = {{"seed", config.seeds.probe},
                               {"bias", std::string(task2vec::to_string(d.probe.bias))},
                               {"norm", std::string(task2vec::to_string(d.probe.norm))}};
  manifest.notes()["hellinger_stream"] = {{"seed", config.seeds.eval}, {"stream_id", 0}};
  return rows;
}

CorrelationReport correlate_sweep(const std::filesystem::path& sweep_csv) {
  const numerics::CsvTable table = numerics::read_csv_table(sweep_csv);
  if (table.rows.size() < 3) throw InsufficientData("correlate: need at least 3 sweep rows");
  const std::size_t hc = table.column("hellinger_div");
  const std::size_t tc = table.column("task2vec_div");
  std::vector<double> h;
  std::vector<double> t;
  for (const auto& row : table.rows) {
    try {
      h.push_back(std::stod(row.at(hc)));
      t.push_back(std::stod(row.at(tc)));
    } catch (const std::exception&) {
      throw InvalidInput("correlate: non-numeric diversity value in " + sweep_csv.string());
    }
  }
  CorrelationReport r;
  r.n_rows = h.size();
  r.pearson_r = numerics::pearson(h, t);
  r.spearman_rho = numerics::spearman(h, t);
  std::vector<double> shifted(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) shifted[i] = t[(i + 1) % t.size()];
  r.shifted_pearson_r = numerics::pearson(h, shifted);
  return r;
}

CorrelationReport run_correlate(const RunConfig& config, RunManifest& manifest) {
  const auto report = correlate_sweep(config.resolve(config.correlate.sweep_csv));
  numerics::CsvTable table;
  table.header = {"n_rows", "pearson_r", "spearman_rho", "shifted_pearson_r"};
  table.rows.push_back({std::to_string(report.n_rows), format_double(report.pearson_r),
                        format_double(report.spearman_rho), format_double(report.shifted_pearson_r)});
  write_table(manifest, "correlation.csv", table);
  return report;
}

std::vector<TrainedModels> run_train(const RunConfig& config, RunManifest& manifest) {
  std::vector<TrainedModels> out;
  for (std::size_t i = 0; i < config.specs.size(); ++i) {
    const auto bench = benchmark_for(config, config.specs[i]);
    TrainedModels models;
    for (const auto& method : config.train.methods) {
      auto params = train_one(config, method, i, bench, manifest);
      (method == "maml" ? models.maml : models.usl) = std::move(params);
    }
    out.push_back(std::move(models));
  }
  return out;
}

EvalReport run_eval_matrix(const RunConfig& config, RunManifest& manifest) {
  EvalReport report;
  numerics::CsvTable gap_table;
  gap_table.header = {"sigma_m", "acc_usl_headlr", "acc_maml5", "gap", "combined_ci", "overlap"};
  numerics::CsvTable bayes_table;
  bayes_table.header = {"sigma_m", "bayes_accuracy", "bayes_ci95", "n_tasks"};
  for (std::size_t i = 0; i < config.eval.benchmarks.size(); ++i) {
    const auto& entry = config.eval.benchmarks[i];
    const auto bench = benchmark_for(config, entry.spec);

    std::optional<nnet::ParameterSet> maml;
    std::optional<nnet::ParameterSet> usl;
    if (entry.maml) maml = nnet::load_checkpoint(config.resolve(*entry.maml)).params;
    if (entry.usl) usl = nnet::load_checkpoint(config.resolve(*entry.usl)).params;
    if (config.eval.train_inline) {
      if (!maml) maml = train_one(config, "maml", i, bench, manifest);
      if (!usl) usl = train_one(config, "usl", i, bench, manifest);
    }

    nnet::MlpConfig random_cfg = config.model;
    random_cfg.output_size = config.shape.n_way;
    RngStream random_rng(config.seeds.eval, 100);
    std::vector<metalearn::NamedInit> inits;
    inits.push_back({"random", nnet::init_mlp(random_cfg, random_rng), std::nullopt});
    if (maml) inits.push_back({"maml", *maml, std::nullopt});
    if (usl) {
      std::optional<nnet::DenseLayer> head;
      const auto width = static_cast<std::size_t>(usl->head().weight.cols());
      if (width != config.shape.n_way) {
        if (maml && maml->head().weight.rows() == usl->head().weight.rows() &&
            static_cast<std::size_t>(maml->head().weight.cols()) == config.shape.n_way) {
          head = maml->head();
          manifest.notes()["usl_maml_head_init"][spec_tag(i)] = "maml head";
        } else {
          head = nnet::DenseLayer{Matrix::Zero(usl->head().weight.rows(),
                                               static_cast<Eigen::Index>(config.shape.n_way)),
                                  RowVector::Zero(static_cast<Eigen::Index>(config.shape.n_way))};
          manifest.notes()["usl_maml_head_init"][spec_tag(i)] = "zero head";
        }
      }
      inits.push_back({"usl", *usl, head});
    }

    const auto tasks = gaussbench::sample_tasks(bench.split(config.eval.split), config.shape,
                                                config.eval.n_tasks, RngStream(config.seeds.eval, 1).split(0));
    log("eval " + spec_tag(i) + ": " + std::to_string(inits.size()) + " inits x " +
        std::to_string(config.eval.methods.size()) + " methods on " + std::to_string(tasks.size()) +
        " tasks");
    auto rows = metalearn::eval_matrix(inits, config.eval.methods, tasks, RngStream(config.seeds.eval, 2));
    metalearn::write_eval_csv(manifest.output_dir() / ("eval_" + spec_tag(i) + ".csv"), rows);
    manifest.add_file("eval_" + spec_tag(i) + ".csv");

    const auto bayes = metalearn::bayes_bound(tasks, 1000, RngStream(config.seeds.eval, 3));
    bayes_table.rows.push_back({format_double(entry.spec.sigma_m), format_double(bayes.mean),
                                format_double(bayes.halfwidth), std::to_string(tasks.size())});

    const metalearn::EvalResult* usl_head = nullptr;
    const metalearn::EvalResult* maml5 = nullptr;
    for (const auto& r : rows) {
      if (r.init_label == "usl" && r.adaptation.kind == metalearn::AdaptationMethod::Kind::head_lr) {
        usl_head = &r;
      }
      if (r.init_label == "maml" && r.adaptation == metalearn::AdaptationMethod::maml(5)) maml5 = &r;
    }
    if (usl_head && maml5) {
      const auto cmp = metalearn::compare(*usl_head, *maml5);
      GapRow g{entry.spec.sigma_m, usl_head->accuracy, maml5->accuracy, cmp.difference, cmp.combined_ci,
               cmp.overlap};
      gap_table.rows.push_back({format_double(g.sigma_m), format_double(g.acc_usl_headlr),
                                format_double(g.acc_maml5), format_double(g.gap),
                                format_double(g.combined_ci), g.overlap ? "true" : "false"});
      report.gaps.push_back(g);
    }
    report.matrices.push_back(std::move(rows));
  }
  write_table(manifest, "gap.csv", gap_table);
  write_table(manifest, "bayes.csv", bayes_table);
  manifest.notes()["tasks"] = {{"seed", config.seeds.eval},
                               {"stream_id", 1},
                               {"split_key", 0},
                               {"split", std::string(gaussbench::to_string(config.eval.split))}};
  return report;
}

std::vector<metalearn::LayerDistanceRow> run_repsim(const RunConfig& config, RunManifest& manifest) {
  const auto& r = config.repsim;
  const auto bench = benchmark_for(config, config.specs.front());
  auto side = [&](const RepsimSide& s, const std::string& label) {
    metalearn::ModelSide m;
    m.params = nnet::load_checkpoint(config.resolve(s.checkpoint)).params;
    m.method = s.adaptation;
    m.label = label;
    if (s.head_init_checkpoint) {
      m.head_init = nnet::load_checkpoint(config.resolve(*s.head_init_checkpoint)).params.head();
    }
    return m;
  };
  const auto a = side(r.a, "a");
  const auto b = side(r.b, "b");
  const auto tasks = gaussbench::sample_tasks(bench.split(r.split), config.shape, r.n_tasks,
                                              RngStream(config.seeds.eval, 1).split(0));
  const auto rows =
      metalearn::layerwise_model_distance(a, b, tasks, bench, r.metrics, r.safety, RngStream(config.seeds.eval, 2));
  metalearn::write_distance_csv(manifest.output_dir() / "distances_long.csv", rows);
  manifest.add_file("distances_long.csv");

  numerics::CsvTable wide;
  wide.header = {"layer"};
  for (auto m : r.metrics) {
    wide.header.emplace_back(repsim::to_string(m));
    wide.header.push_back(std::string(repsim::to_string(m)) + "_ci");
  }
  wide.header.push_back("n_tasks");
  wide.header.push_back("risky_tasks");
  for (std::size_t i = 0; i < rows.size(); i += r.metrics.size()) {
    std::vector<std::string> line{rows[i].layer};
    std::size_t risky = 0;
    for (std::size_t m = 0; m < r.metrics.size(); ++m) {
      line.push_back(format_double(rows[i + m].mean));
      line.push_back(format_double(rows[i + m].ci95));
      risky = std::max(risky, rows[i + m].risky_tasks);
    }
    line.push_back(std::to_string(rows[i].n_tasks));
    line.push_back(std::to_string(risky));
    wide.rows.push_back(std::move(line));
  }
  write_table(manifest, "distances.csv", wide);
  return rows;
}

std::vector<repsim::PathologyCell> run_pathology(const RunConfig& config, RunManifest& manifest) {
  const auto& p = config.pathology;
  const auto cells = repsim::pathology_curve(p.dims, p.n_points, RngStream(config.seeds.eval, 0), p.seeds);
  numerics::CsvTable table;
  table.header = {"dim", "n_points", "similarity", "ci95", "seeds"};
  for (const auto& c : cells) {
    table.rows.push_back({std::to_string(c.dim), std::to_string(c.n_points), format_double(c.similarity),
                          format_double(c.ci95), std::to_string(c.seeds)});
  }
  write_table(manifest, "pathology.csv", table);
  return cells;
}

std::vector<HistogramReport> run_histogram(const RunConfig& config, RunManifest& manifest) {
  const auto& h = config.histogram;
  std::vector<HistogramReport> out;
  for (std::size_t i = 0; i < config.specs.size(); ++i) {
    const auto bench = benchmark_for(config, config.specs[i]);
    const auto div = task2vec_diversity(config, bench, h.split, h.n_tasks, h.n_mc, h.probe);
    HistogramReport rep;
    rep.bins = task2vec::distance_histogram(div, h.n_bins);
    rep.fraction_within_2sd = task2vec::fraction_within(div, 2.0);
    rep.diversity = div.mean;
    numerics::CsvTable table;
    table.header = {"bin_lo", "bin_hi", "count"};
    for (const auto& b : rep.bins) {
      table.rows.push_back({format_double(b.lo), format_double(b.hi), std::to_string(b.count)});
    }
    write_table(manifest, "histogram_" + spec_tag(i) + ".csv", table);
    write_matrix(manifest, "heatmap_" + spec_tag(i) + ".csv", div.pairwise);
    manifest.notes()["fraction_within_2sd"][spec_tag(i)] = rep.fraction_within_2sd;
    out.push_back(std::move(rep));
  }
  manifest.notes()["tasks"] = task_stream_note(config, h.split);
  return out;
}

void run_experiment(const RunConfig& config, RunManifest& manifest) {
  switch (config.experiment) {
    case Experiment::div_sweep: run_div_sweep(config, manifest); return;
    case Experiment::train: run_train(config, manifest); return;
    case Experiment::eval_matrix: run_eval_matrix(config, manifest); return;
    case Experiment::repsim: run_repsim(config, manifest); return;
    case Experiment::pathology: run_pathology(config, manifest); return;
    case Experiment::correlate: run_correlate(config, manifest); return;
    case Experiment::histogram: run_histogram(config, manifest); return;
  }
}

}  // namespace metadiv::harness
