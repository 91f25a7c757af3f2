#include "metadiv/harness/cli.hpp"

#include "metadiv/harness/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <ostream>

namespace metadiv::harness {
namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void report(std::ostream& err, const std::string& kind, const std::string& message,
            const std::string& path = {}) {
  nlohmann::json j = {{"error", {{"kind", kind}, {"message", message}}}};
  if (!path.empty()) j["error"]["path"] = path;
  err << j.dump() << '\n';
}

/// Refuses to reuse a directory that belongs to a different command.
void claim_output_dir(const std::filesystem::path& dir, const std::string& command) {
  const auto manifest = dir / "manifest.json";
  if (!std::filesystem::exists(manifest)) return;
  std::ifstream in(manifest);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception&) {
    return;
  }
  const std::string owner = j.value("command", std::string());
  if (!owner.empty() && owner != command) {
    throw ConfigError("output directory " + dir.string() + " belongs to a '" + owner + "' run");
  }
}

}  // namespace

int cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Task-diversity and meta-learning laboratory on synthetic Gaussian benchmarks"};
  app.set_version_flag("--version", artifact_version());
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"div-sweep", "Hellinger and Task2Vec diversity for each benchmark spec"},
      {"train", "Train MAML and/or USL models and write checkpoints"},
      {"eval", "Meta-test evaluation matrix (inits x adaptation methods)"},
      {"repsim", "Layer-wise feature distances between two models"},
      {"pathology", "SVCCA similarity of independent random matrices"},
      {"correlate", "Correlate Hellinger and Task2Vec diversity columns of a sweep"},
      {"hist", "Histograms and heatmaps of pairwise task distances"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir in the config)");
    sub->add_option("--seed-override", seed_override,
                    "Base seed: benchmark=n, train=n+1, eval=n+2, probe=n+3");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report(err, "usage", e.what());
    return kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  std::optional<RunManifest> manifest;
  auto open_manifest = [&](const std::filesystem::path& dir, const nlohmann::json& echo) {
    manifest.emplace(dir, echo, command);
  };
  try {
    if (!out_dir.empty()) {
      claim_output_dir(out_dir, command);
      open_manifest(out_dir, {{"config_path", config_path}});
    }
    if (!std::filesystem::exists(config_path)) {
      throw ConfigError("config file not found: " + config_path);
    }
    RunConfig config = load_config(config_path, experiment_from_subcommand(command));
    if (seed_override) config.seeds = Seeds::from_base(*seed_override);
    if (!out_dir.empty()) {
      config.output_dir = out_dir;
    } else if (config.output_dir) {
      config.output_dir = config.resolve(*config.output_dir);
      claim_output_dir(*config.output_dir, command);
    } else {
      throw ConfigError("no output directory: pass --out or set output_dir");
    }
    nlohmann::json echo = config.source;
    echo["seeds"] = {{"benchmark", config.seeds.benchmark},
                     {"train", config.seeds.train},
                     {"eval", config.seeds.eval},
                     {"probe", config.seeds.probe}};
    echo["task_shape"] = {{"n_way", config.shape.n_way},
                          {"k_support", config.shape.k_support},
                          {"k_query", config.shape.k_query}};
    open_manifest(*config.output_dir, echo);
    manifest->write_started();
    run_experiment(config, *manifest);
    manifest->finalize_success();
    out << nlohmann::json({{"status", "completed"}, {"manifest", manifest->path().string()}}).dump()
        << '\n';
    return 0;
  } catch (const ConfigError& e) {
    report(err, e.kind(), e.what(), config_path);
    if (manifest) {
      try {
        manifest->finalize_failure(e.kind(), e.what());
      } catch (const std::exception&) {
      }
    }
    return kExitUsage;
  } catch (const Error& e) {
    report(err, e.kind(), e.what());
    if (manifest) {
      try {
        manifest->finalize_failure(e.kind(), e.what());
      } catch (const std::exception&) {
      }
    }
    return kExitRuntime;
  } catch (const std::exception& e) {
    report(err, "internal", e.what());
    if (manifest) {
      try {
        manifest->finalize_failure("internal", e.what());
      } catch (const std::exception&) {
      }
    }
    return kExitRuntime;
  }
}

}  // namespace metadiv::harness
