#include "metadiv/gaussbench/benchmark.hpp"

#include "metadiv/error.hpp"
#include "metadiv/numerics/parallel.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

namespace metadiv::gaussbench {
namespace {

constexpr std::uint64_t kHyperStream = 0;
constexpr std::uint64_t kPointStream = 1;

std::vector<double> class_points(const RngStream& root, std::size_t class_id, double mu,
                                 double sigma) {
  RngStream rng = root.split(kPointStream).split(class_id);
  std::vector<double> pts(kPointsPerClass);
  for (double& x : pts) x = rng.normal(mu, sigma);
  return pts;
}

/// First `k` entries of a uniformly shuffled [0, n).
std::vector<std::size_t> choose_without_replacement(std::size_t n, std::size_t k, RngStream& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace

void BenchmarkSpec::validate() const {
  if (!std::isfinite(mu_m) || !std::isfinite(sigma_m) || !std::isfinite(mu_s) ||
      !std::isfinite(sigma_s)) {
    throw InvalidInput("benchmark spec has non-finite parameters");
  }
  if (sigma_m < 0.0 || sigma_s < 0.0) throw InvalidInput("benchmark spec stddevs must be >= 0");
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::meta_train:
      return "meta_train";
    case Split::meta_val:
      return "meta_val";
    case Split::meta_test:
      return "meta_test";
  }
  return "meta_train";
}

Split split_from_string(std::string_view name) {
  if (name == "meta_train") return Split::meta_train;
  if (name == "meta_val") return Split::meta_val;
  if (name == "meta_test") return Split::meta_test;
  throw InvalidInput("unknown split '" + std::string(name) + "'");
}

std::span<const ClassDistribution> Benchmark::split(Split s) const {
  const std::size_t first = static_cast<std::size_t>(s) * kClassesPerSplit;
  if (classes.size() < first + kClassesPerSplit) throw InvalidInput("benchmark is incomplete");
  return std::span<const ClassDistribution>(classes).subspan(first, kClassesPerSplit);
}

GaussianParams draw_class_params(const BenchmarkSpec& spec, RngStream& rng) {
  const double mu = rng.normal(spec.mu_m, spec.sigma_m);
  const double sigma = std::abs(rng.normal(spec.mu_s, spec.sigma_s));
  if (sigma == 0.0) throw InvalidInput("benchmark spec produced a zero class stddev");
  return {mu, sigma};
}

Benchmark sample_benchmark(const BenchmarkSpec& spec, const RngStream& rng) {
  spec.validate();
  Benchmark bench{spec, rng.seed(), rng.stream_id(), {}};
  RngStream hyper = rng.split(kHyperStream);
  bench.classes.resize(3 * kClassesPerSplit);
  for (std::size_t i = 0; i < bench.classes.size(); ++i) {
    const auto p = draw_class_params(spec, hyper);
    auto& c = bench.classes[i];
    c.class_id = i;
    c.split = static_cast<Split>(i / kClassesPerSplit);
    c.mu = p.mu;
    c.sigma = p.sigma;
  }
  parallel_for(bench.classes.size(), [&](std::size_t i) {
    auto& c = bench.classes[i];
    c.points = class_points(rng, c.class_id, c.mu, c.sigma);
  });
  return bench;
}

void export_benchmark(const std::filesystem::path& path, const Benchmark& bench) {
  nlohmann::ordered_json j;
  j["spec"] = {{"mu_m", bench.spec.mu_m},
               {"sigma_m", bench.spec.sigma_m},
               {"mu_s", bench.spec.mu_s},
               {"sigma_s", bench.spec.sigma_s}};
  j["seed"] = bench.seed;
  j["stream_id"] = bench.stream_id;
  j["rng"] = std::string(RngStream::kAlgorithm);
  auto& classes = j["classes"] = nlohmann::ordered_json::array();
  for (const auto& c : bench.classes) {
    classes.push_back({{"class_id", c.class_id},
                       {"split", std::string(to_string(c.split))},
                       {"mu", c.mu},
                       {"sigma", c.sigma}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Benchmark import_benchmark(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    Benchmark bench;
    const auto& s = j.at("spec");
    bench.spec = {s.at("mu_m").get<double>(), s.at("sigma_m").get<double>(),
                  s.at("mu_s").get<double>(), s.at("sigma_s").get<double>()};
    bench.spec.validate();
    bench.seed = j.at("seed").get<std::uint64_t>();
    bench.stream_id = j.at("stream_id").get<std::uint64_t>();
    const RngStream root(bench.seed, bench.stream_id);
    for (const auto& c : j.at("classes")) {
      ClassDistribution cls;
      cls.class_id = c.at("class_id").get<std::size_t>();
      cls.split = split_from_string(c.at("split").get<std::string>());
      cls.mu = c.at("mu").get<double>();
      cls.sigma = c.at("sigma").get<double>();
      if (!(cls.sigma > 0.0)) throw InvalidInput("class stddev must be positive");
      cls.points = class_points(root, cls.class_id, cls.mu, cls.sigma);
      bench.classes.push_back(std::move(cls));
    }
    if (bench.classes.size() != 3 * kClassesPerSplit) {
      throw InvalidInput("benchmark file must list 300 classes");
    }
    return bench;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("malformed benchmark file " + path.string() + ": " + e.what());
  }
}

Matrix FewShotTask::combined_x() const {
  Matrix x(support_x.rows() + query_x.rows(), support_x.cols());
  x << support_x, query_x;
  return x;
}

std::vector<int> FewShotTask::combined_y() const {
  std::vector<int> y = support_y;
  y.insert(y.end(), query_y.begin(), query_y.end());
  return y;
}

FewShotTask sample_task(std::span<const ClassDistribution> classes, std::size_t n_way,
                        std::size_t k_support, std::size_t k_query, RngStream& rng) {
  if (n_way < 2) throw InvalidInput("sample_task: need at least 2 ways");
  if (classes.size() < n_way) {
    throw InvalidInput("sample_task: split has " + std::to_string(classes.size()) +
                       " classes, need " + std::to_string(n_way));
  }
  const auto chosen = choose_without_replacement(classes.size(), n_way, rng);
  FewShotTask task;
  task.support_x.resize(static_cast<Eigen::Index>(n_way * k_support), 1);
  task.query_x.resize(static_cast<Eigen::Index>(n_way * k_query), 1);
  for (std::size_t w = 0; w < n_way; ++w) {
    const auto& cls = classes[chosen[w]];
    if (cls.points.size() < k_support + k_query) {
      throw InvalidInput("sample_task: class " + std::to_string(cls.class_id) +
                         " has too few points");
    }
    task.ways.push_back({cls.class_id, cls.mu, cls.sigma});
    auto shots = choose_without_replacement(cls.points.size(), k_support + k_query, rng);
    std::vector<std::size_t> sup(shots.begin(), shots.begin() + static_cast<long>(k_support));
    std::vector<std::size_t> qry(shots.begin() + static_cast<long>(k_support), shots.end());
    for (std::size_t s = 0; s < k_support; ++s) {
      task.support_x(static_cast<Eigen::Index>(w * k_support + s), 0) = cls.points[sup[s]];
      task.support_y.push_back(static_cast<int>(w));
    }
    for (std::size_t q = 0; q < k_query; ++q) {
      task.query_x(static_cast<Eigen::Index>(w * k_query + q), 0) = cls.points[qry[q]];
      task.query_y.push_back(static_cast<int>(w));
    }
    task.support_index.push_back(std::move(sup));
    task.query_index.push_back(std::move(qry));
  }
  return task;
}

std::vector<FewShotTask> sample_tasks(std::span<const ClassDistribution> classes,
                                      const TaskShape& shape, std::size_t count,
                                      const RngStream& rng) {
  std::vector<FewShotTask> tasks(count);
  for (std::size_t i = 0; i < count; ++i) {
    RngStream local = rng.split(i);
    tasks[i] = sample_task(classes, shape.n_way, shape.k_support, shape.k_query, local);
  }
  return tasks;
}

}  // namespace metadiv::gaussbench
