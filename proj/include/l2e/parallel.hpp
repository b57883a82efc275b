#pragma once

#include <functional>

namespace l2e {

// Number of worker threads to use. Priority: L2E_WORKERS environment
// variable, then `requested` if positive, then hardware concurrency.
int resolve_workers(int requested);

// Runs fn(i) for i in [0, n). With workers > 1 the indices are distributed
// over a thread pool; the caller is responsible for writing results into
// per-index slots so the outcome does not depend on scheduling. The first
// exception thrown by any index is rethrown after all threads join.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace l2e
