#pragma once

#include <cstddef>
#include <functional>

namespace qebm {

// Worker cap: min(hardware threads, QEBM_THREADS if set). Always >= 1.
int worker_count();

// Splits [0, n) into contiguous chunks, one worker thread per chunk.
// fn(begin, end) must not throw across threads without being self-contained;
// exceptions are captured and the first one is rethrown after join.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace qebm
