#pragma once

#include <cstddef>
#include <functional>

namespace pelm {

/// Worker count for a request: 0 means one per hardware thread.
int resolve_threads(int requested);

/// Runs body(begin, end) over [0, n) split into contiguous chunks of at most
/// `grain` items, handed out in order to `threads` workers. Each index is
/// visited exactly once. The first exception thrown by any chunk is rethrown
/// after all workers stop.
void parallel_for(std::size_t n, int threads, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body);

} // namespace pelm
