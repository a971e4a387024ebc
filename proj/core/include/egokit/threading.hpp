#pragma once

#include <cstddef>
#include <functional>

namespace egokit {

/// Thread cap: EGOKIT_THREADS when set (>= 1), otherwise hardware
/// concurrency.
std::size_t max_threads();

/// Runs fn(i) for i in [0, n). Work items must be independent; results
/// should be written to preallocated per-index slots so the outcome does
/// not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace egokit
