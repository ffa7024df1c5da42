#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace pipest {

/// Number of worker threads solvers may use. Capped by the PIPEST_THREADS
/// environment variable when set.
inline unsigned solverThreadCount() {
  unsigned count = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PIPEST_THREADS")) {
    char* end = nullptr;
    const long requested = std::strtol(env, &end, 10);
    if (end != env && requested >= 1 && requested <= 1024) {
      count = static_cast<unsigned>(requested);
    }
  }
  return count;
}

/// Runs fn(i) for i in [0, n). Work items must be independent; results must
/// not depend on the thread count.
template <typename Fn>
void parallelFor(std::size_t n, Fn&& fn) {
  const std::size_t threads =
      std::min<std::size_t>(solverThreadCount(), std::max<std::size_t>(n, 1));
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& worker : pool) worker.join();
}

}  // namespace pipest
