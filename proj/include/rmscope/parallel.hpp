#pragma once

#include <cstddef>
#include <functional>

namespace rmscope {

// Worker count from RMSCOPE_WORKERS, falling back to hardware concurrency.
std::size_t default_worker_count();

// Runs body(i) for every i in [0, n) on up to `workers` threads. Each index is
// visited exactly once; callers write results into per-index slots so output
// never depends on scheduling. The exception thrown for the lowest failing
// index is rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace rmscope
