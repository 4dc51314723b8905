#pragma once

#include <cstddef>
#include <functional>

namespace evh {

/// Worker cap: EVH_THREADS when set (>=1), otherwise hardware concurrency.
int max_threads();

/// Runs fn(i) for i in [0, n) on up to max_threads() workers. Tasks must write
/// to disjoint slots; the partitioning is deterministic, so results are
/// independent of the worker count. Exceptions are rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace evh
