#pragma once

// Minimal work queue: `count` independent tasks pulled by `workers` threads.
// Each task writes only its own output slot, so results do not depend on the
// scheduling. The first exception (lowest index) is rethrown after all
// workers have joined.

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace advdiff {

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs task(i) for i in [0, count). Returns the per-index exceptions (null
/// when the task succeeded).
inline std::vector<std::exception_ptr> parallel_for_collect(int count, int workers,
                                                            const std::function<void(int)>& task) {
  std::vector<std::exception_ptr> errors(std::max(count, 0));
  if (count <= 0) return errors;
  std::atomic<int> next{0};
  auto loop = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::min(resolve_workers(workers), count);
  if (n <= 1) {
    loop();
    return errors;
  }
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (int w = 0; w < n; ++w) pool.emplace_back(loop);
  for (auto& t : pool) t.join();
  return errors;
}

inline void parallel_for(int count, int workers, const std::function<void(int)>& task) {
  for (auto& e : parallel_for_collect(count, workers, task))
    if (e) std::rethrow_exception(e);
}

}  // namespace advdiff
