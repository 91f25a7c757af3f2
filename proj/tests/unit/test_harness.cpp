#include "metadiv/harness/cli.hpp"
#include "metadiv/harness/config.hpp"
#include "metadiv/harness/experiments.hpp"
#include "metadiv/harness/manifest.hpp"
#include "metadiv/numerics/csv.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace metadiv;
using namespace metadiv::harness;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("metadiv_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  out << j.dump(2);
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "metadiv");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

json spec(double sigma_m) { return {{"mu_m", 0}, {"sigma_m", sigma_m}, {"mu_s", 1}, {"sigma_s", 0.01}}; }

json tiny_sweep() {
  return {{"experiment", "div_sweep"},
          {"specs", {spec(0.01), spec(10)}},
          {"model", {{"hidden_sizes", {8, 8}}}},
          {"div_sweep", {{"n_pairs", 1000}, {"n_tasks", 4}, {"n_mc", 1}}}};
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig c = parse_config(tiny_sweep());
  CHECK(c.experiment == Experiment::div_sweep);
  CHECK(c.specs.size() == 2);
  CHECK(c.model.hidden_sizes == std::vector<std::size_t>{8, 8});
  CHECK(c.model.output_size == 5);
  CHECK(c.div_sweep.n_tasks == 4);
  CHECK(c.div_sweep.probe.norm == task2vec::ProbeNorm::input);
  CHECK(c.seeds.probe == 4);

  json unknown = tiny_sweep();
  unknown["div_sweep"]["n_task"] = 3;
  CHECK_THROWS_AS(parse_config(unknown), ConfigError);
  json wrong_type = tiny_sweep();
  wrong_type["div_sweep"]["n_tasks"] = "many";
  CHECK_THROWS_AS(parse_config(wrong_type), ConfigError);
  json bad_spec = tiny_sweep();
  bad_spec["specs"][0]["sigma_m"] = -1;
  CHECK_THROWS_AS(parse_config(bad_spec), ConfigError);
  json no_specs = tiny_sweep();
  no_specs.erase("specs");
  CHECK_THROWS_AS(parse_config(no_specs), ConfigError);
  CHECK_THROWS_AS(parse_config(tiny_sweep(), Experiment::train), ConfigError);
  json eval = {{"experiment", "eval_matrix"}, {"specs", {spec(1)}}};
  CHECK_THROWS_AS(parse_config(eval), ConfigError);
  eval["eval"] = {{"train_inline", true}, {"methods", {"none", "maml_3"}}};
  const RunConfig e = parse_config(eval);
  CHECK(e.eval.benchmarks.size() == 1);
  CHECK(e.eval.methods.size() == 2);

  for (auto x : {Experiment::div_sweep, Experiment::train, Experiment::eval_matrix, Experiment::repsim,
                 Experiment::pathology, Experiment::correlate, Experiment::histogram}) {
    CHECK(experiment_from_string(to_string(x)) == x);
    CHECK(experiment_from_subcommand(subcommand_of(x)) == x);
  }
  const Seeds s = Seeds::from_base(10);
  CHECK(s.benchmark == 10);
  CHECK(s.probe == 13);
  CHECK(spec_from_json(spec_to_json({1, 2, 3, 4})) == gaussbench::BenchmarkSpec{1, 2, 3, 4});
}

TEST_CASE("shipped presets parse") {
  for (const char* scale : {"ci", "full"}) {
    for (const auto& entry : fs::directory_iterator(fs::path(METADIV_SOURCE_DIR) / "configs" / scale)) {
      INFO(entry.path().string());
      CHECK_NOTHROW(load_config(entry.path()));
    }
  }
}

TEST_CASE("manifest digests match the files") {
  const fs::path dir = scratch_dir("manifest");
  RunManifest m(dir, {{"k", 1}}, "div-sweep");
  m.write_started();
  CHECK(read_json(m.path())["status"] == "running");
  {
    std::ofstream out(dir / "a.csv");
    out << "abc";
  }
  m.add_file("a.csv");
  m.notes()["note"] = "x";
  m.finalize_success();
  const json j = read_json(m.path());
  CHECK(j["status"] == "completed");
  CHECK(j["prng"] == "xoshiro256**/splitmix64");
  CHECK(j["artifact_version"] == artifact_version());
  CHECK(j["files"][0]["path"] == "a.csv");
  CHECK(j["files"][0]["bytes"] == 3);
  // SHA-256("abc") from FIPS 180-2.
  CHECK(j["files"][0]["sha256"] == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_file(dir / "a.csv") == j["files"][0]["sha256"]);
  m.finalize_failure("io", "disk full");
  CHECK(read_json(m.path())["error"]["kind"] == "io");
}

TEST_CASE("correlation of sweep columns") {
  const fs::path dir = scratch_dir("correlate");
  numerics::CsvTable t;
  t.header = {"mu_m", "sigma_m", "mu_s", "sigma_s", "hellinger_div", "hellinger_ci", "task2vec_div", "task2vec_ci",
              "n_pairs"};
  for (int i = 0; i < 6; ++i) {
    const double h = 0.1 * i;
    t.rows.push_back({"0", std::to_string(i), "1", "0.01", std::to_string(h), "0", std::to_string(3 * h + 1), "0",
                      "10"});
  }
  write_csv_table(dir / "sweep.csv", t);
  const CorrelationReport r = correlate_sweep(dir / "sweep.csv");
  CHECK(r.pearson_r == doctest::Approx(1.0));
  CHECK(r.spearman_rho == doctest::Approx(1.0));
  CHECK(r.shifted_pearson_r < 0.5);
  CHECK(r.n_rows == 6);
  t.rows.resize(2);
  write_csv_table(dir / "short.csv", t);
  CHECK_THROWS_AS(correlate_sweep(dir / "short.csv"), InsufficientData);
}

TEST_CASE("cli error paths") {
  const fs::path dir = scratch_dir("cli_errors");
  const CliRun missing = run_cli({"div-sweep", "--config", (dir / "nope.json").string(), "--out", (dir / "o").string()});
  CHECK(missing.code == 2);
  const json err = json::parse(missing.err);
  CHECK(err["error"]["path"] == (dir / "nope.json").string());
  CHECK(read_json(dir / "o" / "manifest.json")["status"] == "failed");

  CHECK(run_cli({"div-sweep", "--bogus"}).code == 2);
  CHECK(run_cli({"frobnicate", "--config", "x.json"}).code == 2);
  CHECK(run_cli({}).code == 2);
  CHECK(json::parse(run_cli({"div-sweep"}).err)["error"]["kind"] == "usage");

  json bad = tiny_sweep();
  bad["surprise"] = true;
  write_json(dir / "bad.json", bad);
  const CliRun b = run_cli({"div-sweep", "--config", (dir / "bad.json").string(), "--out", (dir / "b").string()});
  CHECK(b.code == 2);
  CHECK(json::parse(b.err)["error"]["kind"] == "config");

  write_json(dir / "sweep.json", tiny_sweep());
  CHECK(run_cli({"train", "--config", (dir / "sweep.json").string(), "--out", (dir / "t").string()}).code == 2);
  CHECK(run_cli({"div-sweep", "--config", (dir / "sweep.json").string()}).code == 2);  // no output dir
}

TEST_CASE("cli div-sweep is reproducible") {
  const fs::path dir = scratch_dir("cli_sweep");
  write_json(dir / "sweep.json", tiny_sweep());
  const CliRun a = run_cli({"div-sweep", "--config", (dir / "sweep.json").string(), "--out", (dir / "s1").string()});
  REQUIRE(a.code == 0);
  const CliRun b = run_cli({"div-sweep", "--config", (dir / "sweep.json").string(), "--out", (dir / "s2").string()});
  REQUIRE(b.code == 0);
  CHECK(slurp(dir / "s1" / "sweep.csv") == slurp(dir / "s2" / "sweep.csv"));
  const auto t = numerics::read_csv_table(dir / "s1" / "sweep.csv");
  CHECK(t.rows.size() == 2);
  CHECK(t.header[4] == "hellinger_div");
  const json m = read_json(dir / "s1" / "manifest.json");
  CHECK(m["status"] == "completed");
  for (const auto& f : m["files"]) CHECK(sha256_file(dir / "s1" / f["path"].get<std::string>()) == f["sha256"]);
  CHECK(m["config"]["seeds"]["probe"] == 4);

  const CliRun c = run_cli({"div-sweep", "--config", (dir / "sweep.json").string(), "--out", (dir / "s3").string(),
                            "--seed-override", "50"});
  REQUIRE(c.code == 0);
  CHECK(read_json(dir / "s3" / "manifest.json")["config"]["seeds"]["probe"] == 53);
  CHECK(slurp(dir / "s1" / "sweep.csv") != slurp(dir / "s3" / "sweep.csv"));

  // A directory owned by another command is left alone.
  json path_cfg = {{"experiment", "pathology"}, {"pathology", {{"dims", {2}}, {"n_points", {40}}, {"seeds", 2}}}};
  write_json(dir / "path.json", path_cfg);
  CHECK(run_cli({"pathology", "--config", (dir / "path.json").string(), "--out", (dir / "s1").string()}).code == 2);
  CHECK(read_json(dir / "s1" / "manifest.json")["command"] == "div-sweep");

  json zero = tiny_sweep();
  zero["specs"] = {{{"mu_m", 0}, {"sigma_m", 0}, {"mu_s", 1}, {"sigma_s", 0}}};
  write_json(dir / "zero.json", zero);
  REQUIRE(run_cli({"div-sweep", "--config", (dir / "zero.json").string(), "--out", (dir / "z").string()}).code == 0);
  const auto zt = numerics::read_csv_table(dir / "z" / "sweep.csv");
  CHECK(std::stod(zt.rows[0][zt.column("hellinger_div")]) == 0.0);
}

TEST_CASE("cli train then eval pipeline") {
  const fs::path dir = scratch_dir("cli_pipeline");
  const json model = {{"hidden_sizes", {8, 8}}};
  write_json(dir / "train.json", {{"experiment", "train"},
                                  {"specs", {spec(0.01)}},
                                  {"model", model},
                                  {"train",
                                   {{"maml", {{"iterations", 3}, {"meta_batch", 2}, {"eval_interval", 3}, {"eval_tasks", 4}}},
                                    {"usl", {{"epochs", 1}, {"eval_interval", 1}, {"eval_tasks", 4}}}}}});
  REQUIRE(run_cli({"train", "--config", (dir / "train.json").string(), "--out", (dir / "t").string()}).code == 0);
  CHECK(fs::exists(dir / "t" / "maml_spec0.json"));
  CHECK(fs::exists(dir / "t" / "usl_spec0_curve.csv"));

  write_json(dir / "eval.json", {{"experiment", "eval_matrix"},
                                 {"model", model},
                                 {"eval",
                                  {{"n_tasks", 6},
                                   {"benchmarks",
                                    {{{"spec", spec(0.01)},
                                      {"maml_checkpoint", "t/maml_spec0.json"},
                                      {"usl_checkpoint", "t/usl_spec0.json"}}}}}}});
  const CliRun e = run_cli({"eval", "--config", (dir / "eval.json").string(), "--out", (dir / "e").string()});
  INFO(e.err);
  REQUIRE(e.code == 0);
  const auto table = numerics::read_csv_table(dir / "e" / "eval_spec0.csv");
  CHECK(table.rows.size() == 12);
  CHECK(table.header == std::vector<std::string>{"init", "adaptation", "accuracy", "ci95", "n_tasks"});
  const auto gap = numerics::read_csv_table(dir / "e" / "gap.csv");
  CHECK(gap.header == std::vector<std::string>{"sigma_m", "acc_usl_headlr", "acc_maml5", "gap", "combined_ci", "overlap"});

  write_json(dir / "repsim.json", {{"experiment", "repsim"},
                                   {"specs", {spec(0.01)}},
                                   {"model", model},
                                   {"repsim",
                                    {{"n_tasks", 2},
                                     {"a", {{"checkpoint", "t/maml_spec0.json"}}},
                                     {"b", {{"checkpoint", "t/maml_spec0.json"}}}}}});
  REQUIRE(run_cli({"repsim", "--config", (dir / "repsim.json").string(), "--out", (dir / "r").string()}).code == 0);
  const auto d = numerics::read_csv_table(dir / "r" / "distances.csv");
  CHECK(d.rows.size() == 3);
  for (const auto& row : d.rows) {
    for (const char* metric : {"svcca", "pwcca", "lincka", "opd"}) CHECK(std::stod(row[d.column(metric)]) <= 1e-6);
  }
}
