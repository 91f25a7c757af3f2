#include "metadiv/error.hpp"
#include "metadiv/metalearn/adaptation.hpp"
#include "metadiv/metalearn/evaluation.hpp"
#include "metadiv/metalearn/model_distance.hpp"
#include "metadiv/metalearn/trainers.hpp"
#include "metadiv/nnet/inner_loop.hpp"
#include "metadiv/nnet/logistic_head.hpp"
#include "metadiv/numerics/csv.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace metadiv;
using namespace metadiv::metalearn;
using gaussbench::Split;

namespace {

nnet::MlpConfig small_model() {
  nnet::MlpConfig c;
  c.hidden_sizes = {8, 8};
  c.output_size = 5;
  return c;
}

const gaussbench::Benchmark& bench_low() {
  static const auto b = gaussbench::sample_benchmark({0, 0.01, 1, 0.01}, RngStream(1));
  return b;
}

const gaussbench::Benchmark& bench_mid() {
  static const auto b = gaussbench::sample_benchmark({0, 3, 1, 0.01}, RngStream(2));
  return b;
}

std::vector<gaussbench::FewShotTask> tasks_of(const gaussbench::Benchmark& b, std::size_t n, std::uint64_t seed) {
  return gaussbench::sample_tasks(b.split(Split::meta_test), {}, n, RngStream(seed));
}

LearningCurve val_curve(std::initializer_list<std::pair<std::size_t, double>> pts) {
  LearningCurve c;
  for (auto [s, a] : pts) c.points.push_back({s, "meta_val", 1.0, a});
  return c;
}

std::string read_first_line(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("adaptation methods") {
  CHECK(AdaptationMethod::none().label() == "none");
  CHECK(AdaptationMethod::maml(5).label() == "maml_5");
  CHECK(AdaptationMethod::head_lr().label() == "head_lr");
  for (const char* s : {"none", "maml_5", "maml_10", "head_lr"}) {
    CHECK(adaptation_from_string(s).label() == s);
  }
  CHECK(adaptation_from_string("maml_10") == AdaptationMethod::maml(10));
  CHECK_THROWS_AS(adaptation_from_string("maml_x"), InvalidInput);
  CHECK_THROWS_AS(adaptation_from_string("finetune"), InvalidInput);
  CHECK_THROWS_AS(AdaptationMethod::maml(0).validate(), InvalidInput);
  CHECK_THROWS_AS(AdaptationMethod::head_lr(0.0).validate(), InvalidInput);
}

TEST_CASE("adapt") {
  RngStream rng(3);
  const nnet::ParameterSet p = nnet::init_mlp(small_model(), rng);
  const auto task = tasks_of(bench_mid(), 1, 4)[0];
  RngStream head_rng(5);

  CHECK(adapt(p, task.support_x, task.support_y, 5, AdaptationMethod::none(), std::nullopt, head_rng) == p);

  const nnet::ParameterSet m5 =
      adapt(p, task.support_x, task.support_y, 5, AdaptationMethod::maml(5), std::nullopt, head_rng);
  CHECK(m5 == nnet::sgd_adapt(p, task.support_x, task.support_y, 5, 0.1));

  const nnet::ParameterSet h1 =
      adapt(p, task.support_x, task.support_y, 5, AdaptationMethod::head_lr(), std::nullopt, head_rng);
  const nnet::ParameterSet h2 =
      adapt(p, task.support_x, task.support_y, 5, AdaptationMethod::head_lr(), std::nullopt, head_rng);
  CHECK(h1 == h2);
  for (std::size_t l = 0; l + 1 < p.layers.size(); ++l) {
    CHECK(h1.layers[l].weight == p.layers[l].weight);
  }
  const auto fit = nnet::fit_logistic_head(nnet::features(p, task.support_x), task.support_y, 5);
  CHECK(h1.head().weight == fit.head.weights);

  // A 100-way head is swapped for a 5-way one.
  nnet::MlpConfig wide = small_model();
  wide.output_size = 100;
  const nnet::ParameterSet w = nnet::init_mlp(wide, rng);
  RngStream hr1(6), hr2(6);
  const nnet::ParameterSet fresh =
      adapt(w, task.support_x, task.support_y, 5, AdaptationMethod::none(), std::nullopt, hr1);
  CHECK(fresh.head().weight.cols() == 5);
  CHECK(fresh.head().weight == nnet::init_head(8, 5, hr2).weight);
  CHECK_THROWS_AS(adapt(w, task.support_x, task.support_y, 5, AdaptationMethod::maml(5), std::nullopt, hr1),
                  InvalidInput);
  nnet::DenseLayer zero_head{Matrix::Zero(8, 5), RowVector::Zero(5)};
  nnet::ParameterSet with_zero = w;
  with_zero.head() = zero_head;
  CHECK(adapt(w, task.support_x, task.support_y, 5, AdaptationMethod::maml(3), zero_head, hr1) ==
        nnet::sgd_adapt(with_zero, task.support_x, task.support_y, 3, 0.1));
}

TEST_CASE("meta-test evaluation") {
  RngStream rng(7);
  const nnet::ParameterSet p = nnet::init_mlp(small_model(), rng);
  const auto tasks = tasks_of(bench_mid(), 40, 8);
  const EvalResult none = meta_test(p, tasks, AdaptationMethod::none(), RngStream(9), std::nullopt, "random");
  CHECK(none.n_tasks == 40);
  CHECK(none.per_task.size() == 40);
  CHECK(std::abs(none.accuracy - 0.2) <= 2.0 * none.ci95 + 1e-12);
  CHECK(none.init_label == "random");

  const EvalResult again = meta_test(p, tasks, AdaptationMethod::none(), RngStream(9));
  CHECK(again.per_task == none.per_task);

  const auto bayes = bayes_bound(tasks, 2000, RngStream(10));
  for (const auto& m : {AdaptationMethod::maml(5), AdaptationMethod::head_lr()}) {
    const EvalResult r = meta_test(p, tasks, m, RngStream(9));
    CHECK(r.accuracy <= bayes.mean + 2.0 * (bayes.halfwidth + r.ci95));
    CHECK(r.loss >= 0.0);
  }
  const EvalResult sampled = meta_test(p, bench_mid(), Split::meta_test, AdaptationMethod::head_lr(), 10,
                                       RngStream(11));
  CHECK(sampled.n_tasks == 10);
}

TEST_CASE("evaluation matrix and comparisons") {
  RngStream rng(12);
  const auto tasks = tasks_of(bench_low(), 12, 13);
  std::vector<NamedInit> inits;
  for (const char* name : {"random", "maml", "usl"}) inits.push_back({name, nnet::init_mlp(small_model(), rng), {}});
  const std::vector<AdaptationMethod> methods{AdaptationMethod::none(), AdaptationMethod::maml(5),
                                              AdaptationMethod::maml(10), AdaptationMethod::head_lr()};
  const auto rows = eval_matrix(inits, methods, tasks, RngStream(14));
  REQUIRE(rows.size() == 12);
  CHECK(rows[0].init_label == "random");
  CHECK(rows[3].adaptation == AdaptationMethod::head_lr());
  CHECK(rows[4].init_label == "maml");
  const auto rows2 = eval_matrix(inits, methods, tasks, RngStream(14));
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].per_task == rows2[i].per_task);

  EvalResult a, b;
  a.accuracy = 0.5;
  a.ci95 = 0.02;
  b.accuracy = 0.46;
  b.ci95 = 0.01;
  const Comparison c = compare(a, b);
  CHECK(c.difference == doctest::Approx(0.04));
  CHECK(c.combined_ci == doctest::Approx(0.03));
  CHECK_FALSE(c.overlap);
  b.ci95 = 0.03;
  CHECK(compare(a, b).overlap);

  const auto path = std::filesystem::temp_directory_path() / "metadiv_eval.csv";
  write_eval_csv(path, rows);
  const auto table = numerics::read_csv_table(path);
  CHECK(table.header == std::vector<std::string>{"init", "adaptation", "accuracy", "ci95", "n_tasks"});
  CHECK(table.rows.size() == 12);
  CHECK(table.rows[5][1] == "maml_5");
  std::filesystem::remove(path);
}

TEST_CASE("plateau rule") {
  // Budget 100: the final window is steps >= 80.
  CHECK(plateaued(val_curve({{0, 0.2}, {40, 0.5}, {70, 0.6}, {80, 0.59}, {100, 0.601}}), 100));
  CHECK_FALSE(plateaued(val_curve({{0, 0.2}, {40, 0.5}, {70, 0.6}, {100, 0.61}}), 100));
  CHECK(plateaued(val_curve({{0, 0.2}, {40, 0.5}, {70, 0.6}, {100, 0.55}}), 100));
  CHECK_FALSE(plateaued(val_curve({{0, 0.2}}), 100));
}

TEST_CASE("maml training") {
  MamlConfig c;
  c.iterations = 0;
  c.meta_batch = 4;
  c.eval_tasks = 5;
  c.eval_interval = 2;
  const RngStream rng(15);
  const TrainResult zero = maml_train(bench_mid(), small_model(), c, rng);
  RngStream init = rng.split(0);
  CHECK(zero.params == nnet::init_mlp(small_model(), init));

  c.iterations = 4;
  std::size_t calls = 0;
  const TrainResult a = maml_train(bench_mid(), small_model(), c, rng, [&](std::size_t, const LearningCurve&) { ++calls; });
  const TrainResult b = maml_train(bench_mid(), small_model(), c, rng);
  CHECK(calls == 4);
  CHECK(a.params == b.params);
  CHECK_FALSE(a.params == zero.params);
  CHECK(a.curve.of_split("meta_val").size() == 3);  // iterations 0, 2, 4
  CHECK(a.curve.of_split("meta_train").size() == 2);

  MamlConfig first = c;
  first.second_order = false;
  CHECK_FALSE(maml_train(bench_mid(), small_model(), first, rng).params == a.params);

  MamlConfig wild = c;
  wild.inner_lr = 1e300;
  try {
    maml_train(bench_mid(), small_model(), wild, rng);
    FAIL("expected TrainingDiverged");
  } catch (const TrainingDiverged& e) {
    CHECK(e.last_good().all_finite());
    CHECK(std::string(e.kind()) == "training_diverged");
  }
  MamlConfig bad = c;
  bad.meta_batch = 0;
  CHECK_THROWS_AS(maml_train(bench_mid(), small_model(), bad, rng), InvalidInput);

  const auto path = std::filesystem::temp_directory_path() / "metadiv_curve.csv";
  write_curve_csv(path, a.curve);
  CHECK(read_first_line(path) == "iteration_or_epoch,split,loss,accuracy");
  std::filesystem::remove(path);
}

TEST_CASE("maml on the low-diversity benchmark stays near chance") {
  MamlConfig c;
  c.iterations = 20;
  c.meta_batch = 8;
  c.eval_tasks = 100;
  c.eval_interval = 20;
  const TrainResult r = maml_train(bench_low(), small_model(), c, RngStream(16));
  const auto val = r.curve.of_split("meta_val");
  std::vector<double> acc;
  for (const auto& p : val) acc.push_back(p.accuracy);
  // Each point averages 100 tasks x 75 queries; 3 CIs of a 0.2 rate is about 0.014.
  for (double a : acc) CHECK(std::abs(a - 0.2) <= 3.0 * 1.96 * std::sqrt(0.2 * 0.8 / 7500.0) + 0.02);
}

TEST_CASE("usl training") {
  UslConfig c;
  c.epochs = 1;
  c.eval_interval = 1;
  c.eval_tasks = 5;
  const RngStream rng(17);
  const TrainResult a = usl_train(bench_low(), small_model(), c, rng);
  const TrainResult b = usl_train(bench_low(), small_model(), c, rng);
  CHECK(a.params == b.params);
  CHECK(a.params.head().weight.cols() == 100);
  const auto train = a.curve.of_split("meta_train");
  REQUIRE(train.size() == 1);
  CHECK(train[0].accuracy < 0.02);  // 100 indistinguishable classes
  c.epochs = 0;
  RngStream init = rng.split(0);
  nnet::MlpConfig wide = small_model();
  wide.output_size = 100;
  CHECK(usl_train(bench_low(), small_model(), c, rng).params == nnet::init_mlp(wide, init));
}

TEST_CASE("layer-wise model distance") {
  RngStream rng(18);
  const nnet::ParameterSet p = nnet::init_mlp(small_model(), rng);
  CHECK(evaluation_batch_size(p, 5) == 80);
  nnet::MlpConfig odd = small_model();
  odd.hidden_sizes = {8, 13};
  CHECK(evaluation_batch_size(nnet::init_mlp(odd, rng), 5) == 130);
  CHECK(evaluation_batch_size(nnet::init_mlp(odd, rng), 4) == 132);

  const auto tasks = tasks_of(bench_mid(), 4, 19);
  const std::vector<repsim::Metric> all(repsim::kAllMetrics.begin(), repsim::kAllMetrics.end());
  const ModelSide a{p, AdaptationMethod::maml(5), std::nullopt, "a"};
  const auto same = layerwise_model_distance(a, a, tasks, bench_mid(), all, {}, RngStream(20));
  REQUIRE(same.size() == 12);
  CHECK(same[0].layer == "hidden1");
  CHECK(same[11].layer == "head");
  CHECK(same[11].metric == repsim::Metric::opd);
  for (const auto& row : same) {
    CHECK(row.mean <= 1e-6);
    CHECK(row.n_tasks == 4);
    CHECK(row.risky_tasks == 0);
  }

  const ModelSide other{nnet::init_mlp(small_model(), rng), AdaptationMethod::none(), std::nullopt, "b"};
  const auto diff = layerwise_model_distance(a, other, tasks, bench_mid(), all, {}, RngStream(20));
  // With a 1-D input and zero biases the first layer of any init spans
  // relu(x) and relu(-x), so differences show up deeper in the network.
  double widest = 0.0;
  for (const auto& row : diff) widest = std::max(widest, row.mean);
  CHECK(widest > 1e-2);

  const auto tight = layerwise_model_distance(a, other, tasks, bench_mid(), all, {}, RngStream(20), 20);
  CHECK(tight[0].risky_tasks == 4);  // 20 examples for 8 features

  const auto path = std::filesystem::temp_directory_path() / "metadiv_dist.csv";
  write_distance_csv(path, diff);
  CHECK(read_first_line(path) == "layer,metric,mean,ci95,n_tasks,risky_tasks");
  std::filesystem::remove(path);
}
