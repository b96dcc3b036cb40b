#pragma once

#include <cstddef>
#include <functional>

namespace arapdepth {

/// Worker count used by parallel_for (default 1).
void set_thread_count(int threads);
int thread_count();

/// Calls body(i) for i in [0, n), split into contiguous blocks across the
/// configured threads. Bodies must only write to per-index state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace arapdepth
