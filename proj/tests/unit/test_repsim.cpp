#include "metadiv/error.hpp"
#include "metadiv/numerics/stats.hpp"
#include "metadiv/repsim/cca.hpp"
#include "metadiv/repsim/conv_reshape.hpp"
#include "metadiv/repsim/distances.hpp"
#include "metadiv/repsim/layer_matrix.hpp"
#include "metadiv/repsim/pathology.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <filesystem>

using namespace metadiv;
using namespace metadiv::repsim;

namespace {

LayerMatrix gaussian_layer(Eigen::Index n, Eigen::Index d, RngStream& rng) {
  return make_layer_matrix(oracle::gaussian_matrix(n, d, rng));
}

Vector values(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("layer matrix validation") {
  CHECK_THROWS_AS(make_layer_matrix(Matrix(0, 3)), InvalidInput);
  Matrix bad = Matrix::Ones(3, 2);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(make_layer_matrix(bad), InvalidInput);
  for (auto m : {ReshapeMode::plain, ReshapeMode::channels_as_features,
                 ReshapeMode::activations_as_features}) {
    CHECK(reshape_mode_from_string(to_string(m)) == m);
  }
}

TEST_CASE("layer matrix fixture round trip") {
  RngStream rng(1);
  LayerMatrix l = make_layer_matrix(oracle::gaussian_matrix(7, 3, rng), "hidden1", "maml",
                                    ReshapeMode::activations_as_features);
  const auto path = std::filesystem::temp_directory_path() / "metadiv_layer.csv";
  save_layer_matrix(path, l);
  const LayerMatrix back = load_layer_matrix(path);
  CHECK((back.matrix.array() == l.matrix.array()).all());
  CHECK(back.layer_name == "hidden1");
  CHECK(back.source_model == "maml");
  CHECK(back.reshape_mode == ReshapeMode::activations_as_features);
  std::filesystem::remove(path);
  std::filesystem::remove(std::filesystem::path(path).replace_extension(".json"));
}

TEST_CASE("safety margin") {
  CHECK(safety_margin_ok(1000, 64));
  CHECK_FALSE(safety_margin_risky(1000, 64));
  CHECK(safety_margin_ok(300, 300));
  CHECK(safety_margin_risky(300, 300));
  CHECK_FALSE(safety_margin_ok(300, 3001));
  CHECK_FALSE(safety_margin_ok(100, 1001));
  SafetyPolicy bad;
  bad.safety_factor = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("svd keep count") {
  CHECK(svd_keep_count(values({9, 0.5, 0.5})) == 3);
  CHECK(svd_keep_count(values({1, 0})) == 1);
  CHECK(svd_keep_count(values({1, 1, 1})) == 3);
  CHECK(svd_keep_count(values({100, 1e-3, 1e-3})) == 1);
}

TEST_CASE("svd truncation keeps the dominant subspace") {
  RngStream rng(2);
  Matrix base = oracle::gaussian_matrix(200, 2, rng);
  Matrix m(200, 4);
  m << base, base * 1e-6;
  const LayerMatrix t = truncate_svd_99(make_layer_matrix(m));
  CHECK(t.features() == 2);
  CHECK(t.examples() == 200);
}

TEST_CASE("cca agrees with the brute-force oracle") {
  RngStream rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = oracle::gaussian_matrix(6, 3, rng);
    const Matrix t = oracle::gaussian_matrix(3, 3, rng) + 3.0 * Matrix::Identity(3, 3);
    const Matrix b = oracle::gaussian_matrix(6, 3, rng);
    const CcaResult self = cca(make_layer_matrix(a), make_layer_matrix(a * t));
    CHECK((self.correlations.array() - 1.0).abs().maxCoeff() <= 1e-6);
    const Vector mine = cca(make_layer_matrix(a), make_layer_matrix(b)).correlations;
    const Vector ref = oracle::canonical_correlations(a, b);
    CHECK((mine - ref).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("cca invariances and noise floor") {
  RngStream rng(4);
  const Matrix a = oracle::gaussian_matrix(50, 3, rng);
  const Matrix q = oracle::random_orthogonal(3, rng);
  CHECK((cca(make_layer_matrix(a), make_layer_matrix(a)).correlations.array() - 1.0).abs().maxCoeff() <=
        1e-6);
  CHECK((cca(make_layer_matrix(a), make_layer_matrix(a * q)).correlations.array() - 1.0)
            .abs()
            .maxCoeff() <= 1e-6);
  const Vector rho = cca(gaussian_layer(2000, 10, rng), gaussian_layer(2000, 10, rng)).correlations;
  CHECK(rho.mean() < 0.2);
  CHECK(rho.minCoeff() >= 0.0);
  CHECK_THROWS_AS(cca(gaussian_layer(10, 2, rng), gaussian_layer(11, 2, rng)), InvalidInput);
}

TEST_CASE("svcca distance") {
  RngStream rng(5);
  const LayerMatrix x = gaussian_layer(500, 6, rng);
  CHECK(std::abs(svcca_distance(x, x)) <= 1e-6);
  const double safe = svcca_distance(gaussian_layer(320, 16, rng), gaussian_layer(320, 16, rng));
  CHECK(safe > 0.5);
  // N = D: CCA alone is pathologically close to perfect; the 0.99 truncation
  // keeps about 270 of 300 directions, which pulls SVCCA down to roughly 0.92.
  const LayerMatrix a = gaussian_layer(300, 300, rng);
  const LayerMatrix b = gaussian_layer(300, 300, rng);
  CHECK(cca(a, b).correlations.mean() > 0.99);
  const double square = svcca_distance(a, b);
  CHECK(square < 0.1);
  CHECK(square < 0.2 * safe);
}

TEST_CASE("pwcca distance") {
  RngStream rng(6);
  const LayerMatrix x = gaussian_layer(2000, 8, rng);
  CHECK(std::abs(pwcca_distance(x, x)) <= 1e-6);
  const LayerMatrix xq = make_layer_matrix(x.matrix * oracle::random_orthogonal(8, rng));
  CHECK(std::abs(pwcca_distance(x, xq)) <= 1e-4);
  const LayerMatrix y = gaussian_layer(2000, 5, rng);
  const Vector w = pwcca_weights(x, y);
  CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w.minCoeff() >= 0.0);
  const double d1 = pwcca_distance(x, y, PwccaWeighting::first_argument);
  const double d2 = pwcca_distance(x, y, PwccaWeighting::fewer_truncated);
  CHECK(d1 >= 0.0);
  CHECK(d2 >= 0.0);
}

TEST_CASE("linear cka distance") {
  RngStream rng(7);
  const LayerMatrix x = gaussian_layer(300, 8, rng);
  const LayerMatrix y = gaussian_layer(300, 5, rng);
  CHECK(std::abs(lincka_distance(x, x)) <= 1e-8);
  CHECK(std::abs(lincka_distance(x, make_layer_matrix(4.5 * x.matrix))) <= 1e-8);
  CHECK(std::abs(lincka_distance(x, y) - lincka_distance(y, x)) <= 1e-10);
  CHECK(lincka_distance(gaussian_layer(2000, 8, rng), gaussian_layer(2000, 8, rng)) > 0.8);

  // Direct evaluation of the defining formula on centered inputs.
  const Matrix xc = x.matrix.rowwise() - x.matrix.colwise().mean();
  const Matrix yc = y.matrix.rowwise() - y.matrix.colwise().mean();
  const double expected = 1.0 - (xc.transpose() * yc).squaredNorm() /
                                    ((xc.transpose() * xc).norm() * (yc.transpose() * yc).norm());
  CHECK(lincka_distance(x, y) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("orthogonal procrustes distance") {
  RngStream rng(8);
  const LayerMatrix x = gaussian_layer(200, 6, rng);
  CHECK(std::abs(opd_distance(x, x)) <= 1e-8);
  const Matrix q = oracle::random_orthogonal(6, rng);
  CHECK(std::abs(opd_distance(x, make_layer_matrix(x.matrix * q))) <= 1e-6);
  RowVector shift = oracle::gaussian_matrix(1, 6, rng);
  const Matrix moved = (3.0 * x.matrix).rowwise() + shift;
  CHECK(std::abs(opd_distance(x, make_layer_matrix(moved))) <= 1e-6);
  CHECK_THROWS_AS(opd_distance(x, gaussian_layer(200, 4, rng)), InvalidInput);
  const LayerMatrix y = gaussian_layer(200, 6, rng);
  CHECK(std::abs(opd_distance(x, y) - opd_distance(y, x)) <= 1e-10);
  const double d = opd_distance(x, y);
  CHECK(d > 0.0);
  CHECK(d <= 1.0);
}

TEST_CASE("distance dispatch and safety report") {
  RngStream rng(9);
  const LayerMatrix x = gaussian_layer(40, 8, rng);
  const LayerMatrix y = gaussian_layer(40, 8, rng);
  for (Metric m : kAllMetrics) {
    CHECK(metric_from_string(to_string(m)) == m);
    const DistanceReport r = compare(m, x, y);
    CHECK(r.metric == m);
    CHECK(r.risky);  // 40 < 10 * 8
    CHECK(r.distance == doctest::Approx(distance(m, x, y)));
  }
  CHECK(compare(Metric::pwcca, x, y).asymmetry >= 0.0);
  CHECK_THROWS_AS(metric_from_string("cosine"), InvalidInput);
}

TEST_CASE("conv reshape") {
  RngStream rng(10);
  SafetyPolicy policy;
  ActivationTensor small(2, 3, 2, 2);
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t h = 0; h < 2; ++h)
        for (std::size_t w = 0; w < 2; ++w) small.at(m, c, h, w) = 1000.0 * m + 100.0 * c + 10.0 * h + w;
  const LayerMatrix ch = conv_layer_matrix(small, ReshapeMode::channels_as_features, policy, rng);
  CHECK(ch.examples() == 8);
  CHECK(ch.features() == 3);
  CHECK(ch.matrix(0, 1) == 100.0);  // (m=0, h=0, w=0), channel 1
  const LayerMatrix act = conv_layer_matrix(small, ReshapeMode::activations_as_features, policy, rng);
  CHECK(act.examples() == 2);
  CHECK(act.features() == 12);
  CHECK(act.matrix(1, 5) == 1000.0 + 100.0 + 0.0 + 1.0);  // (c=1, h=0, w=1)

  ActivationTensor big(100, 4, 8, 8);
  const LayerMatrix sub = conv_layer_matrix(big, ReshapeMode::channels_as_features, policy, rng);
  CHECK(sub.examples() == 80);
  CHECK(sub.features() == 4);
  CHECK_THROWS_AS(conv_layer_matrix(small, ReshapeMode::plain, policy, rng), InvalidInput);
}

TEST_CASE("pathology curve") {
  const RngStream rng(11);
  const auto cells = pathology_curve({1}, {10000}, rng, 3);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].similarity < 0.05);

  const auto sweep = pathology_curve({10, 50, 100, 200, 300}, {300}, rng, 2);
  std::vector<double> dims, sims;
  for (const auto& c : sweep) {
    dims.push_back(static_cast<double>(c.dim));
    sims.push_back(c.similarity);
  }
  CHECK(numerics::spearman(dims, sims) >= 0.9);
}
