#pragma once

#include <cstddef>
#include <functional>

namespace stelle {

/// Worker count: STELLE_NUM_THREADS if set, else hardware concurrency.
int thread_count();

/// Calls body(i) for i in [0, n). Iterations must be independent; output order is unaffected by threading.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace stelle
