#pragma once

#include <cstddef>
#include <functional>

namespace egcn {

/// EGCN_THREADS if set to a positive integer, else the hardware concurrency (at least 1).
std::size_t default_thread_count();

/// Splits [0, count) into `threads` contiguous chunks and runs body(begin, end, worker)
/// on each. The first exception thrown by any chunk is rethrown after all chunks finish.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t begin, std::size_t end, std::size_t worker)>& body);

}  // namespace egcn
