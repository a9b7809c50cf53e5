#pragma once

#include <cstddef>
#include <functional>

namespace mcvd {

/// Worker count: MCVD_THREADS if set to a positive integer, else hardware concurrency.
unsigned worker_count();

/// Calls body(begin, end) on contiguous blocks covering [0, n), spread over
/// worker_count() threads. Blocks are disjoint; body must only write to
/// per-index state.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace mcvd
