#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace mechforge {

/// Worker cap: MECHFORGE_THREADS when set, hardware concurrency otherwise.
int worker_count();

/// Runs f(0..n-1) across workers. Each index must write only to its own
/// output slot, so results are identical for any worker count.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
  int workers = worker_count();
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
  };
  std::vector<std::thread> pool;
  int spawn = std::min<std::size_t>(static_cast<std::size_t>(workers), n) - 1;
  pool.reserve(static_cast<std::size_t>(spawn));
  for (int t = 0; t < spawn; ++t) pool.emplace_back(run);
  run();
  for (std::thread& t : pool) t.join();
}

}  // namespace mechforge
