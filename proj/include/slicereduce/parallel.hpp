#pragma once

#include <cstddef>
#include <functional>

namespace slicereduce {

// 0 means "all hardware threads".
unsigned resolve_threads(unsigned requested);

// Runs fn(i) for i in [0, n) on up to `threads` workers. If any call throws,
// no new indices are started and the exception of the lowest failing index
// is rethrown, so failures are reported identically for every thread count.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)> &fn);

}  // namespace slicereduce
