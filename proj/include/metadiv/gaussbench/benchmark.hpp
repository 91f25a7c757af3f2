#pragma once

#include "metadiv/numerics/matrix.hpp"
#include "metadiv/numerics/rng.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace metadiv::gaussbench {

/// Hyperprior of a synthetic benchmark: class means ~ N(mu_m, sigma_m),
/// class stddevs ~ |N(mu_s, sigma_s)|.
struct BenchmarkSpec {
  double mu_m = 0.0;
  double sigma_m = 1.0;
  double mu_s = 1.0;
  double sigma_s = 0.01;

  void validate() const;
  friend bool operator==(const BenchmarkSpec&, const BenchmarkSpec&) = default;
};

enum class Split { meta_train, meta_val, meta_test };

std::string_view to_string(Split split);
Split split_from_string(std::string_view name);

inline constexpr std::size_t kClassesPerSplit = 100;
inline constexpr std::size_t kPointsPerClass = 1000;

struct GaussianParams {
  double mu = 0.0;
  double sigma = 1.0;
};

struct ClassDistribution {
  std::size_t class_id = 0;
  Split split = Split::meta_train;
  double mu = 0.0;
  double sigma = 1.0;
  std::vector<double> points;

  GaussianParams params() const { return {mu, sigma}; }
};

/// 300 materialized classes. Point pools are a pure function of
/// (seed, stream_id, class_id, mu, sigma), so exports omit them.
struct Benchmark {
  BenchmarkSpec spec;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::vector<ClassDistribution> classes;

  std::span<const ClassDistribution> split(Split s) const;
};

/// Draws one (mu, sigma) pair from the hyperprior. Throws InvalidInput if the
/// absolute-valued stddev comes out exactly zero.
GaussianParams draw_class_params(const BenchmarkSpec& spec, RngStream& rng);

Benchmark sample_benchmark(const BenchmarkSpec& spec, const RngStream& rng);

void export_benchmark(const std::filesystem::path& path, const Benchmark& bench);
Benchmark import_benchmark(const std::filesystem::path& path);

struct WayClass {
  std::size_t class_id = 0;
  double mu = 0.0;
  double sigma = 1.0;
};

/// An n-way episode. Rows of support_x/query_x are grouped by way; labels are
/// way positions 0..n-1.
struct FewShotTask {
  std::vector<WayClass> ways;
  Matrix support_x;  // (n * k_support) x 1
  std::vector<int> support_y;
  Matrix query_x;    // (n * k_query) x 1
  std::vector<int> query_y;
  std::vector<std::vector<std::size_t>> support_index;  // per way, into the class pool
  std::vector<std::vector<std::size_t>> query_index;

  std::size_t n_way() const { return ways.size(); }
  Matrix combined_x() const;
  std::vector<int> combined_y() const;
};

/// Chooses n distinct classes uniformly without replacement, then k_support +
/// k_query distinct points from each class's pool.
FewShotTask sample_task(std::span<const ClassDistribution> classes, std::size_t n_way,
                        std::size_t k_support, std::size_t k_query, RngStream& rng);

/// Default episode shape: 5-way, 10 support and 15 query shots per way.
struct TaskShape {
  std::size_t n_way = 5;
  std::size_t k_support = 10;
  std::size_t k_query = 15;
};

/// `count` tasks, task i drawn from rng.split(i).
std::vector<FewShotTask> sample_tasks(std::span<const ClassDistribution> classes,
                                      const TaskShape& shape, std::size_t count,
                                      const RngStream& rng);

}  // namespace metadiv::gaussbench
