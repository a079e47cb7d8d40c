#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace funcclust {

namespace detail {
inline int& thread_limit() {
  static int limit = 0;  // 0 = use hardware concurrency
  return limit;
}
}  // namespace detail

/// Cap the number of worker threads used by parallel sections (0 = hardware).
inline void set_max_threads(int n) { detail::thread_limit() = n < 0 ? 0 : n; }

inline int max_threads() {
  int limit = detail::thread_limit();
  if (limit > 0) return limit;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Run fn(i) for i in [begin, end) across up to max_threads() workers.
///
/// Work is split into contiguous blocks. fn must write its result into a
/// per-index slot and perform no shared reductions; under that contract the
/// outcome is identical for every thread count, including 1.
template <typename F>
void parallel_for(std::size_t begin, std::size_t end, F&& fn) {
  if (end <= begin) return;
  const std::size_t count = end - begin;
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(max_threads()), count);
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t block = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = begin + w * block;
    const std::size_t hi = std::min(end, lo + block);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace funcclust
