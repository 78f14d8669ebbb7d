#pragma once

#include <cstddef>
#include <functional>

namespace ksm {

// Worker count: KSM_STAB_THREADS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
int thread_budget();

// Calls body(i) for i in [0, count). Each index runs exactly once; callers
// write results into per-index slots, so reductions stay deterministic.
// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace ksm
