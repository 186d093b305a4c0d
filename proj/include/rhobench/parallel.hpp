#pragma once

#include <cstdint>
#include <functional>

namespace rhobench {

// Worker budget for coarse-grained loops. RHOBENCH_THREADS caps it; the
// default is the hardware concurrency. Always >= 1.
int worker_count();

// Runs fn(begin, end) over a partition of [0, n). Chunks are contiguous and
// assigned deterministically; nested calls degrade to serial execution so a
// worker never spawns workers of its own. Exceptions propagate to the caller
// (first one wins).
void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace rhobench
