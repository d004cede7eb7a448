#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace micalib::detail {

/// Static block partition of [0, n) over at most `threads` workers.
/// Results must be written to per-index slots; the partition (and thus
/// any such output) is independent of the worker count.
template <typename Fn>
void parallel_for(size_t n, int threads, Fn&& fn) {
  const int workers =
      std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const size_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const size_t lo = w * chunk;
    const size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace micalib::detail
