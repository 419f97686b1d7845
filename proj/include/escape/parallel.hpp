#pragma once

#include <cstddef>
#include <functional>

namespace escape {

/// Worker count: hardware concurrency, capped by ESCAPE_SPECTRAL_THREADS when
/// that variable holds a positive integer. Always >= 1.
std::size_t worker_count();

/// Calls body(begin, end) on disjoint contiguous chunks of [0, count).
/// Chunk boundaries depend only on `count` and `chunks`, never on timing.
void parallel_chunks(std::size_t count, std::size_t chunks,
                     const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace escape
