#include "rhobench/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rhobench {

namespace {
thread_local bool inside_worker = false;
}

int worker_count() {
  static const int cached = [] {
    int n = 0;
    if (const char* env = std::getenv("RHOBENCH_THREADS")) {
      n = std::atoi(env);
    }
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(n, 1);
  }();
  return cached;
}

void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  const int workers =
      inside_worker ? 1 : static_cast<int>(std::min<std::int64_t>(worker_count(), n));
  if (workers == 1) {
    fn(0, n);
    return;
  }

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto run_chunk = [&](int w) {
    inside_worker = true;
    const std::int64_t begin = n * w / workers;
    const std::int64_t end = n * (w + 1) / workers;
    try {
      if (begin < end) fn(begin, end);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
    inside_worker = false;
  };

  for (int w = 1; w < workers; ++w) pool.emplace_back(run_chunk, w);
  run_chunk(0);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace rhobench
