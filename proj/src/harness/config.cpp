#include "metadiv/harness/config.hpp"

#include "metadiv/nnet/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>

namespace metadiv::harness {
namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
void read(const json& j, std::string_view key, T& out) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("key '" + std::string(key) + "': " + e.what());
  }
}

task2vec::ProbeOptions parse_probe(const json& j) {
  check_keys(j, {"bias", "norm"}, "probe");
  task2vec::ProbeOptions p;
  if (j.contains("bias")) p.bias = task2vec::probe_bias_from_string(j.at("bias").get<std::string>());
  if (j.contains("norm")) p.norm = task2vec::probe_norm_from_string(j.at("norm").get<std::string>());
  return p;
}

nnet::AdamConfig parse_adam(const json& j) {
  check_keys(j, {"lr", "beta1", "beta2", "eps"}, "adam");
  nnet::AdamConfig a;
  read(j, "lr", a.lr);
  read(j, "beta1", a.beta1);
  read(j, "beta2", a.beta2);
  read(j, "eps", a.eps);
  return a;
}

gaussbench::Split parse_split(const json& j, gaussbench::Split fallback) {
  if (!j.contains("split")) return fallback;
  return gaussbench::split_from_string(j.at("split").get<std::string>());
}

metalearn::MamlConfig parse_maml(const json& j, const gaussbench::TaskShape& shape) {
  check_keys(j, {"inner_lr", "inner_steps", "meta_batch", "adam", "second_order", "iterations",
                 "eval_interval", "eval_tasks"},
             "maml");
  metalearn::MamlConfig m;
  read(j, "inner_lr", m.inner_lr);
  read(j, "inner_steps", m.inner_steps);
  read(j, "meta_batch", m.meta_batch);
  read(j, "second_order", m.second_order);
  read(j, "iterations", m.iterations);
  read(j, "eval_interval", m.eval_interval);
  read(j, "eval_tasks", m.eval_tasks);
  if (j.contains("adam")) m.outer = parse_adam(j.at("adam"));
  m.shape = shape;
  m.validate();
  return m;
}

metalearn::UslConfig parse_usl(const json& j, const gaussbench::TaskShape& shape) {
  check_keys(j, {"epochs", "batch_size", "adam", "eval_interval", "eval_tasks"}, "usl");
  metalearn::UslConfig u;
  read(j, "epochs", u.epochs);
  read(j, "batch_size", u.batch_size);
  read(j, "eval_interval", u.eval_interval);
  read(j, "eval_tasks", u.eval_tasks);
  if (j.contains("adam")) u.adam = parse_adam(j.at("adam"));
  u.shape = shape;
  u.validate();
  return u;
}

std::vector<metalearn::AdaptationMethod> parse_methods(const json& j) {
  std::vector<metalearn::AdaptationMethod> out;
  for (const auto& m : j) out.push_back(metalearn::adaptation_from_string(m.get<std::string>()));
  if (out.empty()) throw ConfigError("eval: methods must not be empty");
  return out;
}

RepsimSide parse_side(const json& j, std::string_view where) {
  check_keys(j, {"checkpoint", "adaptation", "head_init_checkpoint"}, where);
  if (!j.contains("checkpoint")) throw ConfigError(std::string(where) + ": checkpoint is required");
  RepsimSide s;
  s.checkpoint = j.at("checkpoint").get<std::string>();
  s.adaptation = metalearn::adaptation_from_string(j.value("adaptation", std::string("none")));
  if (j.contains("head_init_checkpoint")) {
    s.head_init_checkpoint = j.at("head_init_checkpoint").get<std::string>();
  }
  return s;
}

}  // namespace

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::div_sweep: return "div_sweep";
    case Experiment::train: return "train";
    case Experiment::eval_matrix: return "eval_matrix";
    case Experiment::repsim: return "repsim";
    case Experiment::pathology: return "pathology";
    case Experiment::correlate: return "correlate";
    case Experiment::histogram: return "histogram";
  }
  return "div_sweep";
}

Experiment experiment_from_string(std::string_view name) {
  for (auto e : {Experiment::div_sweep, Experiment::train, Experiment::eval_matrix, Experiment::repsim,
                 Experiment::pathology, Experiment::correlate, Experiment::histogram}) {
    if (to_string(e) == name) return e;
  }
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

std::string_view subcommand_of(Experiment e) {
  switch (e) {
    case Experiment::div_sweep: return "div-sweep";
    case Experiment::train: return "train";
    case Experiment::eval_matrix: return "eval";
    case Experiment::repsim: return "repsim";
    case Experiment::pathology: return "pathology";
    case Experiment::correlate: return "correlate";
    case Experiment::histogram: return "hist";
  }
  return "div-sweep";
}

Experiment experiment_from_subcommand(std::string_view subcommand) {
  for (auto e : {Experiment::div_sweep, Experiment::train, Experiment::eval_matrix, Experiment::repsim,
                 Experiment::pathology, Experiment::correlate, Experiment::histogram}) {
    if (subcommand_of(e) == subcommand) return e;
  }
  throw ConfigError("unknown subcommand '" + std::string(subcommand) + "'");
}

Seeds Seeds::from_base(std::uint64_t base) { return {base, base + 1, base + 2, base + 3}; }

std::filesystem::path RunConfig::resolve(const std::filesystem::path& p) const {
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

json spec_to_json(const gaussbench::BenchmarkSpec& spec) {
  return {{"mu_m", spec.mu_m}, {"sigma_m", spec.sigma_m}, {"mu_s", spec.mu_s}, {"sigma_s", spec.sigma_s}};
}

gaussbench::BenchmarkSpec spec_from_json(const json& j) {
  check_keys(j, {"mu_m", "sigma_m", "mu_s", "sigma_s"}, "spec");
  gaussbench::BenchmarkSpec s;
  read(j, "mu_m", s.mu_m);
  read(j, "sigma_m", s.sigma_m);
  read(j, "mu_s", s.mu_s);
  read(j, "sigma_s", s.sigma_s);
  s.validate();
  return s;
}

RunConfig parse_config(const json& j, std::optional<Experiment> expected,
                       const std::filesystem::path& base_dir) {
  try {
    check_keys(j, {"experiment", "seeds", "specs", "model", "task_shape", "output_dir", "div_sweep",
                   "train", "eval", "repsim", "pathology", "correlate", "histogram"},
               "config");
    RunConfig c;
    c.source = j;
    c.base_dir = base_dir;
    if (j.contains("experiment")) {
      c.experiment = experiment_from_string(j.at("experiment").get<std::string>());
      if (expected && *expected != c.experiment) {
        throw ConfigError("config is for experiment '" + std::string(to_string(c.experiment)) +
                          "', not '" + std::string(to_string(*expected)) + "'");
      }
    } else if (expected) {
      c.experiment = *expected;
    } else {
      throw ConfigError("config: experiment is required");
    }
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      check_keys(s, {"benchmark", "train", "eval", "probe"}, "seeds");
      read(s, "benchmark", c.seeds.benchmark);
      read(s, "train", c.seeds.train);
      read(s, "eval", c.seeds.eval);
      read(s, "probe", c.seeds.probe);
    }
    if (j.contains("specs")) {
      for (const auto& s : j.at("specs")) c.specs.push_back(spec_from_json(s));
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      check_keys(m, {"input_size", "hidden_sizes", "output_size", "activation"}, "model");
      c.model = nnet::mlp_config_from_json(m);
    }
    if (j.contains("task_shape")) {
      const auto& t = j.at("task_shape");
      check_keys(t, {"n_way", "k_support", "k_query"}, "task_shape");
      read(t, "n_way", c.shape.n_way);
      read(t, "k_support", c.shape.k_support);
      read(t, "k_query", c.shape.k_query);
      if (c.shape.n_way < 2 || c.shape.k_support < 1 || c.shape.k_query < 1) {
        throw ConfigError("task_shape: need n_way >= 2 and at least one support and query shot");
      }
    }
    c.model.output_size = c.shape.n_way;
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();

    if (j.contains("div_sweep")) {
      const auto& d = j.at("div_sweep");
      check_keys(d, {"n_pairs", "n_tasks", "n_mc", "probe", "split", "write_heatmaps"}, "div_sweep");
      read(d, "n_pairs", c.div_sweep.n_pairs);
      read(d, "n_tasks", c.div_sweep.n_tasks);
      read(d, "n_mc", c.div_sweep.n_mc);
      read(d, "write_heatmaps", c.div_sweep.write_heatmaps);
      if (d.contains("probe")) c.div_sweep.probe = parse_probe(d.at("probe"));
      c.div_sweep.split = parse_split(d, c.div_sweep.split);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      check_keys(t, {"methods", "maml", "usl"}, "train");
      read(t, "methods", c.train.methods);
      for (const auto& m : c.train.methods) {
        if (m != "maml" && m != "usl") throw ConfigError("train: unknown method '" + m + "'");
      }
    }
    {
      const json empty = json::object();
      const json& t = j.contains("train") ? j.at("train") : empty;
      c.train.maml = parse_maml(t.contains("maml") ? t.at("maml") : empty, c.shape);
      c.train.usl = parse_usl(t.contains("usl") ? t.at("usl") : empty, c.shape);
    }
    c.eval.methods = {metalearn::AdaptationMethod::none(), metalearn::AdaptationMethod::maml(5),
                      metalearn::AdaptationMethod::maml(10), metalearn::AdaptationMethod::head_lr()};
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      check_keys(e, {"benchmarks", "train_inline", "methods", "n_tasks", "split"}, "eval");
      read(e, "train_inline", c.eval.train_inline);
      read(e, "n_tasks", c.eval.n_tasks);
      if (e.contains("methods")) c.eval.methods = parse_methods(e.at("methods"));
      c.eval.split = parse_split(e, c.eval.split);
      if (e.contains("benchmarks")) {
        for (const auto& b : e.at("benchmarks")) {
          check_keys(b, {"spec", "maml_checkpoint", "usl_checkpoint"}, "eval.benchmarks");
          BenchmarkCheckpoints bc;
          bc.spec = spec_from_json(b.at("spec"));
          if (b.contains("maml_checkpoint")) bc.maml = b.at("maml_checkpoint").get<std::string>();
          if (b.contains("usl_checkpoint")) bc.usl = b.at("usl_checkpoint").get<std::string>();
          c.eval.benchmarks.push_back(bc);
        }
      }
    }
    if (j.contains("repsim")) {
      const auto& r = j.at("repsim");
      check_keys(r, {"a", "b", "n_tasks", "metrics", "safety", "split"}, "repsim");
      if (r.contains("a")) c.repsim.a = parse_side(r.at("a"), "repsim.a");
      if (r.contains("b")) c.repsim.b = parse_side(r.at("b"), "repsim.b");
      read(r, "n_tasks", c.repsim.n_tasks);
      if (r.contains("metrics")) {
        c.repsim.metrics.clear();
        for (const auto& m : r.at("metrics")) {
          c.repsim.metrics.push_back(repsim::metric_from_string(m.get<std::string>()));
        }
      }
      if (r.contains("safety")) {
        const auto& s = r.at("safety");
        check_keys(s, {"safety_factor", "subsample_multiplier"}, "repsim.safety");
        read(s, "safety_factor", c.repsim.safety.safety_factor);
        read(s, "subsample_multiplier", c.repsim.safety.subsample_multiplier);
        c.repsim.safety.validate();
      }
      c.repsim.split = parse_split(r, c.repsim.split);
    }
    if (j.contains("pathology")) {
      const auto& p = j.at("pathology");
      check_keys(p, {"dims", "n_points", "seeds"}, "pathology");
      read(p, "dims", c.pathology.dims);
      read(p, "n_points", c.pathology.n_points);
      read(p, "seeds", c.pathology.seeds);
    }
    if (j.contains("correlate")) {
      const auto& r = j.at("correlate");
      check_keys(r, {"sweep_csv"}, "correlate");
      c.correlate.sweep_csv = r.value("sweep_csv", std::string());
    }
    if (j.contains("histogram")) {
      const auto& h = j.at("histogram");
      check_keys(h, {"n_tasks", "n_bins", "n_mc", "probe", "split"}, "histogram");
      read(h, "n_tasks", c.histogram.n_tasks);
      read(h, "n_bins", c.histogram.n_bins);
      read(h, "n_mc", c.histogram.n_mc);
      if (h.contains("probe")) c.histogram.probe = parse_probe(h.at("probe"));
      c.histogram.split = parse_split(h, c.histogram.split);
    }

    switch (c.experiment) {
      case Experiment::div_sweep:
      case Experiment::histogram:
      case Experiment::train:
        if (c.specs.empty()) throw ConfigError("config: at least one spec is required");
        break;
      case Experiment::eval_matrix:
        if (c.eval.benchmarks.empty()) {
          if (!c.eval.train_inline || c.specs.empty()) {
            throw ConfigError("eval: give benchmarks with checkpoints, or specs with train_inline");
          }
          for (const auto& s : c.specs) c.eval.benchmarks.push_back({s, std::nullopt, std::nullopt});
        }
        break;
      case Experiment::repsim:
        if (c.specs.size() != 1) throw ConfigError("repsim: exactly one spec is required");
        if (c.repsim.a.checkpoint.empty() || c.repsim.b.checkpoint.empty()) {
          throw ConfigError("repsim: checkpoints for sides a and b are required");
        }
        break;
      case Experiment::correlate:
        if (c.correlate.sweep_csv.empty()) throw ConfigError("correlate: sweep_csv is required");
        break;
      case Experiment::pathology:
        if (c.pathology.dims.empty() || c.pathology.n_points.empty()) {
          throw ConfigError("pathology: dims and n_points must be non-empty");
        }
        break;
    }
    return c;
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path, std::optional<Experiment> expected) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, expected, path.parent_path());
}

}  // namespace metadiv::harness
