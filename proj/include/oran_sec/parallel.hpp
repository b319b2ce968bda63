#pragma once

#include <cstddef>
#include <functional>

namespace oran_sec {

// Hardware concurrency, capped by ORAN_SEC_BENCH_THREADS when set to a
// positive integer. Never less than 1.
std::size_t worker_threads();

// Calls fn(i) for i in [0, n) on up to `threads` workers. The first
// exception thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace oran_sec
