#pragma once

#include <cstddef>
#include <functional>

namespace wtkin {

// process-wide worker cap (CLI maps the `threads` key / WTKIN_THREADS here)
void set_max_threads(int n);
int max_threads();

// Runs fn(i) for i in [0, n).  Work is split into fixed contiguous blocks
// by index only, and every fn(i) writes to its own slot, so results are
// identical for any worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace wtkin
