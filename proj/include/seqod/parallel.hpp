#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace seqod {

// Chunked parallel loop. Work item i writes only to its own output slot, and
// any randomness is derived per item, so results are identical for any
// thread count.
template <typename Fn>
void parallel_for(size_t n, unsigned threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&fn, n, w, workers] {
      for (size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline unsigned default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace seqod
