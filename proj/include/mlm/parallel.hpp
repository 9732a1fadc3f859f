#pragma once

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace mlm {

/// Runs fn(0), ..., fn(count - 1) on up to `jobs` threads. fn must not throw
/// and must only write to its own slot of any shared output.
template <class F>
void parallel_for(int count, int jobs, F&& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int a = 0; a < count; ++a) fn(a);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (int a = next++; a < count; a = next++) fn(a);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mlm
