#pragma once

#include <cstddef>
#include <functional>

namespace rfadex {

// Worker cap: RFADEX_THREADS if set to a positive integer, else hardware concurrency.
std::size_t worker_count();

// Runs fn(i) for i in [0, n) over contiguous index blocks. Callers write to
// per-index slots, so results do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace rfadex
