#pragma once

#include <cstddef>
#include <functional>

namespace streamgp {

/// Worker cap: STREAMGP_THREADS if set and positive, else hardware concurrency.
int thread_limit();

/// Runs body(begin, end) over disjoint chunks of [0, n). Each chunk writes to
/// its own outputs, so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 64);

}  // namespace streamgp
