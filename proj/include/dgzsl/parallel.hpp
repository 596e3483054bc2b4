#pragma once

#include <cstddef>
#include <functional>

namespace dgzsl {

/// Number of worker threads: DGZSL_THREADS if set and positive, otherwise
/// the hardware concurrency (at least 1).
std::size_t worker_count();

/// Splits [0, n) into contiguous chunks and runs `body(lo, hi)` on each.
/// Runs inline when one worker is available or `n < min_chunk * 2`.
void parallel_for(std::size_t n, std::size_t min_chunk,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace dgzsl
