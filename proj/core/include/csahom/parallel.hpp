#pragma once

// Deterministic fork-join parallel loop on std::thread.  Work items write only
// to preallocated slots indexed by the loop variable, so results are identical
// for any thread count; shared counters must be atomics.

#include <functional>

namespace csahom {

/// Number of worker threads to use: `requested` if > 0, else
/// std::thread::hardware_concurrency() (at least 1).
int resolve_threads(int requested);

/// Runs fn(i) for i in [0, n).  Static chunking over `threads` workers;
/// runs inline when n is small or threads == 1.  The first exception thrown
/// by any worker is rethrown on the calling thread after the join.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace csahom
