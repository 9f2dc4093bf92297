#pragma once

#include <cstddef>
#include <functional>

namespace vcd {

// Worker count: VCD_THREADS when set to a positive integer, else hardware concurrency.
std::size_t thread_count();

// Runs fn(i) for i in [0, n) across thread_count() workers. Callers write
// results into pre-sized slots so output order never depends on scheduling.
// The first exception thrown by any fn is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace vcd
