#pragma once

#include <cstddef>
#include <functional>

namespace hrgc {

// Worker count: CROSSING_PROFILER_THREADS if set to a positive integer,
// otherwise the hardware concurrency (at least 1).
std::size_t worker_count();

// Calls fn(i) for every i in [0, n) on up to worker_count() threads. Each
// index runs exactly once; callers write results into per-index slots so the
// outcome does not depend on scheduling. The first exception is rethrown
// after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace hrgc
