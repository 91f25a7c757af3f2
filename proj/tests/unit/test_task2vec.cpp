#include "metadiv/error.hpp"
#include "metadiv/gaussbench/benchmark.hpp"
#include "metadiv/task2vec/diversity.hpp"
#include "metadiv/task2vec/embedding.hpp"
#include "metadiv/task2vec/probe.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace metadiv;
using namespace metadiv::task2vec;

namespace {

nnet::MlpConfig probe_config(std::vector<std::size_t> hidden = {16, 16}, std::size_t out = 5) {
  nnet::MlpConfig c;
  c.hidden_sizes = std::move(hidden);
  c.output_size = out;
  return c;
}

/// Two-way task with points drawn from N(mu0, s) and N(mu1, s).
gaussbench::FewShotTask gaussian_task(double mu0, double mu1, double s, RngStream& rng,
                                      std::size_t k_support = 10, std::size_t k_query = 15) {
  gaussbench::FewShotTask t;
  t.ways = {{0, mu0, s}, {1, mu1, s}};
  t.support_x.resize(static_cast<Eigen::Index>(2 * k_support), 1);
  t.query_x.resize(static_cast<Eigen::Index>(2 * k_query), 1);
  for (std::size_t w = 0; w < 2; ++w) {
    const double mu = w ? mu1 : mu0;
    for (std::size_t i = 0; i < k_support; ++i) {
      t.support_x(static_cast<Eigen::Index>(w * k_support + i), 0) = rng.normal(mu, s);
      t.support_y.push_back(static_cast<int>(w));
    }
    for (std::size_t i = 0; i < k_query; ++i) {
      t.query_x(static_cast<Eigen::Index>(w * k_query + i), 0) = rng.normal(mu, s);
      t.query_y.push_back(static_cast<int>(w));
    }
  }
  return t;
}

TaskEmbedding vec(std::initializer_list<double> v) {
  TaskEmbedding e;
  e.values.resize(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) e.values(i++) = x;
  return e;
}

}  // namespace

TEST_CASE("probe construction") {
  const auto c = probe_config({128, 128});
  const ProbeNetwork a = make_probe(c, 7);
  const ProbeNetwork b = make_probe(c, 7);
  CHECK(a.feature_params() == b.feature_params());
  CHECK(a.feature_parameter_count() == 16768);
  CHECK(a.feature_dim() == 128);
  CHECK(a.probe_seed() == 7);
  CHECK(a.norm() == ProbeNorm::input);
  for (const auto& l : a.feature_params().layers) CHECK(l.bias.isZero(0.0));
  CHECK_FALSE(make_probe(c, 8).feature_params() == a.feature_params());

  const ProbeNetwork u = make_probe(c, 7, {ProbeBias::uniform_fan_in, ProbeNorm::none});
  CHECK(u.feature_params().layers[0].weight == a.feature_params().layers[0].weight);
  const double bound = 1.0 / std::sqrt(128.0);
  CHECK(u.feature_params().layers[1].bias.cwiseAbs().maxCoeff() <= bound);
  CHECK(u.feature_params().layers[1].bias.cwiseAbs().maxCoeff() > 0.0);

  for (auto n : {ProbeNorm::none, ProbeNorm::input, ProbeNorm::all_layers}) {
    CHECK(probe_norm_from_string(to_string(n)) == n);
  }
  for (auto p : {ProbeBias::zero, ProbeBias::uniform_fan_in}) CHECK(probe_bias_from_string(to_string(p)) == p);
  CHECK_THROWS_AS(probe_norm_from_string("batch"), InvalidInput);

  nnet::ParameterSet wrong;
  wrong.layers.push_back({Matrix::Ones(2, 3), RowVector::Zero(3)});
  CHECK_THROWS_AS(ProbeNetwork(probe_config({3}), wrong, 0), InvalidInput);
}

TEST_CASE("probe features and trace") {
  RngStream rng(1);
  const Matrix x = oracle::gaussian_matrix(30, 1, rng) * 4.0 + Matrix::Constant(30, 1, 2.0);
  for (auto norm : {ProbeNorm::none, ProbeNorm::input, ProbeNorm::all_layers}) {
    const ProbeNetwork p = make_probe(probe_config(), 3, {ProbeBias::zero, norm});
    const auto trace = p.trace(x);
    REQUIRE(trace.size() == 2);
    CHECK(trace.back().pre.cwiseMax(0.0).isApprox(p.features(x)));
    if (norm == ProbeNorm::none) {
      CHECK(p.features(x).isApprox(nnet::features(
          [&] {
            nnet::ParameterSet full = p.feature_params();
            full.layers.push_back({Matrix::Zero(16, 5), RowVector::Zero(5)});
            return full;
          }(),
          x)));
    }
  }
  // Input standardization makes the probe blind to affine rescaling of x.
  const ProbeNetwork p = make_probe(probe_config(), 3);
  const Matrix moved = (x * 25.0).array() - 7.0;
  CHECK((p.features(moved) - p.features(x)).cwiseAbs().maxCoeff() < 1e-10);
  const auto t = p.trace(x);
  CHECK(std::abs(t[0].input.mean()) < 1e-12);
}

TEST_CASE("combined set and fingerprint") {
  RngStream rng(2);
  const auto task = gaussian_task(0, 1, 1, rng);
  const CombinedSet s = combined_set(task);
  CHECK(s.x.rows() == 50);
  CHECK(s.n_way == 2);
  for (Eigen::Index i = 1; i < s.x.rows(); ++i) CHECK(s.x(i - 1, 0) <= s.x(i, 0));

  // Moving points between support and query does not change the set.
  gaussbench::FewShotTask swapped = task;
  std::swap(swapped.support_x, swapped.query_x);
  std::swap(swapped.support_y, swapped.query_y);
  CHECK(fingerprint(combined_set(swapped)) == fingerprint(s));
  gaussbench::FewShotTask other = task;
  other.query_x(0, 0) += 1e-9;
  CHECK(fingerprint(combined_set(other)) != fingerprint(s));
}

TEST_CASE("task head") {
  RngStream rng(3);
  const ProbeNetwork p = make_probe(probe_config(), 4);
  const auto sep = gaussian_task(-5, 5, 0.5, rng);
  const CombinedSet s = combined_set(sep);
  const nnet::LogisticHead h = fit_task_head(p, s);
  CHECK(nnet::accuracy(nnet::head_logits(h, p.features(s.x)), s.y) >= 0.95);
  const nnet::LogisticHead again = fit_task_head(p, sep);
  CHECK((again.weights.array() == h.weights.array()).all());

  const auto same = gaussian_task(0, 0, 1, rng);
  gaussbench::FewShotTask flat = same;
  flat.query_x = flat.query_x.array() * 0.0 + 1.0;
  flat.support_x = flat.support_x.array() * 0.0 + 1.0;
  const nnet::LogisticHead z = fit_task_head(make_probe(probe_config(), 4, {ProbeBias::zero, ProbeNorm::none}), flat);
  CHECK(z.weights.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("fisher diagonal matches the analytic expectation") {
  // One hidden unit: f = relu(w x + b), logits = f * h + c, two classes.
  // E_y[(d log p_y / d w)^2] = 1{wx+b>0} x^2 (h1 - h0)^2 p0 p1.
  nnet::MlpConfig c = probe_config({1}, 2);
  nnet::ParameterSet fp;
  fp.layers.push_back({Matrix::Constant(1, 1, 0.8), RowVector::Constant(1, 0.3)});
  const ProbeNetwork probe(c, fp, 0, ProbeNorm::none);
  nnet::LogisticHead head;
  head.weights.resize(1, 2);
  head.weights << -0.7, 1.1;
  head.bias.resize(2);
  head.bias << 0.2, -0.2;

  RngStream rng(4);
  CombinedSet set;
  set.n_way = 2;
  set.x.resize(20, 1);
  for (int i = 0; i < 20; ++i) {
    set.x(i, 0) = rng.normal(0.0, 2.0);
    set.y.push_back(i % 2);
  }
  const std::size_t n_mc = 20000;
  const double dh = head.weights(0, 1) - head.weights(0, 0);
  double mean_w = 0, mean_b = 0, var_w = 0, var_b = 0;
  for (int i = 0; i < 20; ++i) {
    const double x = set.x(i, 0);
    const double pre = 0.8 * x + 0.3;
    const double f = pre > 0 ? pre : 0.0;
    const double active = pre > 0 ? 1.0 : 0.0;
    const double z0 = f * head.weights(0, 0) + head.bias(0);
    const double z1 = f * head.weights(0, 1) + head.bias(1);
    const double p1 = 1.0 / (1.0 + std::exp(z0 - z1));
    const double p0 = 1.0 - p1;
    // The squared score is (dh * p_other * df)^2, with p_other = p1 when y = 0.
    auto moments = [&](double df, double& mean, double& var) {
      const double a = std::pow(dh * p1 * df, 2), b = std::pow(dh * p0 * df, 2);
      const double m = p0 * a + p1 * b;
      mean += m / 20.0;
      var += p0 * a * a + p1 * b * b - m * m;
    };
    moments(x * active, mean_w, var_w);
    moments(active, mean_b, var_b);
  }
  RngStream mc(5);
  const TaskEmbedding e = fim_diag_embedding(probe, head, set, n_mc, mc);
  REQUIRE(e.values.size() == 2);
  const double ci_w = 1.96 * std::sqrt(var_w / n_mc) / 20.0;
  const double ci_b = 1.96 * std::sqrt(var_b / n_mc) / 20.0;
  CHECK(std::abs(e.values(0) - mean_w) <= 3.0 * ci_w);
  CHECK(std::abs(e.values(1) - mean_b) <= 3.0 * ci_b);
  CHECK(e.n_mc == n_mc);
  CHECK(e.values.minCoeff() >= 0.0);

  // A saturated head (p0 ~ 1 everywhere) has a vanishing score.
  nnet::LogisticHead sure = head;
  sure.bias << 60.0, -60.0;
  RngStream mc2(6);
  CHECK(fim_diag_embedding(probe, sure, set, 10, mc2).values.norm() < 1e-30);
}

TEST_CASE("embeddings") {
  RngStream rng(6);
  const ProbeNetwork p = make_probe(probe_config(), 5);
  const auto task = gaussian_task(0, 2, 1, rng);
  const RngStream mc(7);
  const TaskEmbedding a = embed_task(p, task, 3, mc);
  const TaskEmbedding b = embed_task(p, task, 3, mc);
  CHECK((a.values.array() == b.values.array()).all());
  CHECK(a.values.size() == static_cast<Eigen::Index>(p.feature_parameter_count()));
  CHECK(a.values.minCoeff() >= 0.0);
  CHECK(a.task_id == b.task_id);

  gaussbench::FewShotTask swapped = task;
  std::swap(swapped.support_x, swapped.query_x);
  std::swap(swapped.support_y, swapped.query_y);
  CHECK((embed_task(p, swapped, 3, mc).values.array() == a.values.array()).all());

  const ProbeNetwork q = make_probe(probe_config(), 6);
  CHECK(cosine_distance(a, embed_task(q, task, 3, mc)) > 0.0);
}

TEST_CASE("cosine distance") {
  const TaskEmbedding e = vec({0.3, 1.2, 4.0});
  CHECK(cosine_distance(e, e) == 0.0);
  CHECK(cosine_distance(vec({1, 0}), vec({0, 1})) == doctest::Approx(1.0));
  CHECK(cosine_distance(vec({1, 1}), vec({2, 2})) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cosine_distance(vec({1, 2}), vec({2, 1})) == doctest::Approx(1.0 - 4.0 / 5.0));
  CHECK_THROWS_AS(cosine_distance(vec({0, 0}), vec({1, 0})), UndefinedResult);
  CHECK_THROWS_AS(cosine_distance(vec({1, 0}), vec({1, 0, 0})), InvalidInput);
}

TEST_CASE("diversity coefficient") {
  DiversityResult big;
  big.n_tasks = 500;
  CHECK(big.n_pairs() == 124750);

  RngStream rng(8);
  const ProbeNetwork p = make_probe(probe_config(), 9);
  const auto task = gaussian_task(0, 1, 1, rng);
  const std::vector<gaussbench::FewShotTask> same(5, task);
  const DiversityResult zero = diversity_coefficient(same, p, 2, RngStream(1));
  CHECK(zero.mean == 0.0);
  CHECK(zero.n_pairs() == 10);

  const auto bench = gaussbench::sample_benchmark({0, 3, 1, 0.01}, RngStream(2));
  const DiversityResult d =
      diversity_coefficient(bench.split(gaussbench::Split::meta_test), {}, 12, p, 2, RngStream(3));
  CHECK(d.n_tasks == 12);
  CHECK(d.pairwise.rows() == 12);
  CHECK((d.pairwise - d.pairwise.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.pairwise.diagonal().isZero(0.0));
  CHECK(d.pairwise.minCoeff() >= 0.0);
  CHECK(d.pairwise.maxCoeff() <= 1.0);
  const auto pd = d.pair_distances();
  CHECK(pd.size() == 66);
  CHECK(d.mean == doctest::Approx(std::accumulate(pd.begin(), pd.end(), 0.0) / 66.0));
  CHECK(d.mean > 0.0);
  const DiversityResult again =
      diversity_coefficient(bench.split(gaussbench::Split::meta_test), {}, 12, p, 2, RngStream(3));
  CHECK(again.mean == d.mean);

  const std::vector<gaussbench::FewShotTask> one(1, task);
  CHECK_THROWS_AS(diversity_coefficient(one, p, 2, RngStream(1)), InsufficientData);

  const auto bins = distance_histogram(d, 7);
  CHECK(bins.size() == 7);
  std::size_t total = 0;
  for (const auto& b : bins) total += b.count;
  CHECK(total == 66);
  CHECK(bins.front().lo == doctest::Approx(*std::min_element(pd.begin(), pd.end())));
  CHECK(bins.back().hi == doctest::Approx(*std::max_element(pd.begin(), pd.end())));
  const double f = fraction_within(d, 2.0);
  CHECK(f > 0.0);
  CHECK(f <= 1.0);

  const auto flat_bins = distance_histogram(zero, 5);
  CHECK(flat_bins.front().count == 10);
  for (std::size_t i = 1; i < flat_bins.size(); ++i) CHECK(flat_bins[i].count == 0);
}
