#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace metadiv {

/// xoshiro256** seeded through SplitMix64 from a (seed, stream_id) pair.
///
/// Independent work items derive their own stream with `split`, so draws never
/// depend on thread scheduling. All distributions below are implemented here
/// rather than taken from <random>, whose distribution algorithms differ
/// between standard libraries.
class RngStream {
 public:
  using result_type = std::uint64_t;

  static constexpr std::string_view kAlgorithm = "xoshiro256**/splitmix64";

  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Child stream keyed by `key`; the parent's state is not advanced.
  RngStream split(std::uint64_t key) const;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer on [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer, exposed for deterministic key derivation.
std::uint64_t mix64(std::uint64_t x);

}  // namespace metadiv
