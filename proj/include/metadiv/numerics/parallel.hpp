#pragma once

#include <cstddef>
#include <functional>

namespace metadiv {

/// Worker cap: METADIV_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Items are
/// claimed dynamically; callers write results into index-addressed slots so
/// the outcome never depends on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace metadiv
