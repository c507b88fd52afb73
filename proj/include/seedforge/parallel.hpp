#pragma once

#include <cstddef>
#include <functional>

namespace seedforge {

/// Worker count: SEEDFORGE_THREADS when set to a positive integer, else the
/// hardware concurrency (at least 1).
unsigned worker_count();

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Items are handed
/// out dynamically; fn must only touch per-item state. The first exception
/// thrown (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace seedforge
