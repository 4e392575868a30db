#pragma once

// Minimal deterministic work partitioner. Each index writes to its own
// result slot, so the output is identical regardless of thread count.
// Thread count comes from HUMANAL_THREADS (default: hardware concurrency).

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace humanal {

inline int effective_threads() {
  if (const char* env = std::getenv("HUMANAL_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, count). Work is split into contiguous blocks;
// fn must only touch state owned by index i.
template <typename Fn>
void parallel_for(size_t count, Fn&& fn) {
  const int threads = effective_threads();
  if (threads <= 1 || count <= 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const size_t workers = std::min<size_t>(static_cast<size_t>(threads), count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([w, workers, count, &fn] {
      for (size_t i = w; i < count; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace humanal
