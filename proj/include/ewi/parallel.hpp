#pragma once

#include <cstddef>
#include <functional>

namespace ewi {

/// Worker count: EWI_THREADS if set to a positive integer, otherwise the hardware concurrency.
int worker_count();

/// Override the worker count for this process (0 restores the environment/default rule).
void set_worker_count(int n);

/// Calls body(i) for i in [0, n) on up to worker_count() threads. Each index is
/// processed exactly once; callers write results into per-index slots, so the
/// outcome does not depend on the thread count. The first exception thrown by
/// any body is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace ewi
