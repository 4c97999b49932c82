#pragma once

#include <cstddef>
#include <functional>

namespace reachcert {

/// Number of worker threads used by parallel_for; REACHCERT_THREADS overrides
/// the hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Work is split into contiguous blocks, one per
/// worker; callers write results into per-index slots so the outcome does not
/// depend on the schedule. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace reachcert
