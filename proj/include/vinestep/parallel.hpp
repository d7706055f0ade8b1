#pragma once

#include <cstddef>
#include <functional>

namespace vinestep {

/// Worker cap for parallel loops. Defaults to VINESTEP_THREADS when set,
/// otherwise the hardware concurrency.
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n). Iterations are statically partitioned, so
/// any result written to a per-index slot is independent of the thread count.
/// The first exception thrown by any iteration is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace vinestep
