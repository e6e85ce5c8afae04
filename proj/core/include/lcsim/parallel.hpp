#pragma once

#include <cstdint>
#include <functional>

namespace lcsim {

// Runs fn(index) for every index in [0, n) on up to `threads` workers.
// Work is claimed through a shared atomic counter; callers that need
// thread-count-independent results must make fn(index) self-contained
// (own RNG stream, own output slot). The first exception thrown by fn
// is rethrown on the calling thread after all workers join.
void parallel_for(int64_t n, int threads,
                  const std::function<void(int64_t)>& fn);

}  // namespace lcsim
