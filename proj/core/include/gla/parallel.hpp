#pragma once

#include <cstddef>
#include <functional>

namespace gla {

// Worker count from GLA_THREADS (0 or unset = hardware concurrency).
std::size_t thread_count();

// Runs body(i) for i in [0, n) across up to thread_count() threads. Each index
// runs exactly once; callers write results into per-index slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace gla
