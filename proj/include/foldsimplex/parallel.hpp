#pragma once

#include <cstddef>
#include <functional>

namespace foldsimplex {

/// Worker count: hardware concurrency, capped by FOLDED_SIMPLEX_THREADS when set.
int worker_count();

/**
 * Runs body(i) for i in [0, count). Each index is a self-contained work unit
 * writing only its own output slot, so results do not depend on scheduling.
 * The exception from the lowest failing index is rethrown.
 */
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace foldsimplex
