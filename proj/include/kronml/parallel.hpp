#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace kronml {

inline int default_threads() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn on disjoint contiguous ranges covering [begin, end). Results are
// independent of the worker count as long as fn writes only to its range.
inline void parallel_for(std::size_t begin, std::size_t end, int threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
  const std::size_t total = end > begin ? end - begin : 0;
  if (total == 0) return;
  std::size_t workers = threads < 1 ? 1 : static_cast<std::size_t>(threads);
  if (workers > total) workers = total;
  if (workers == 1) {
    fn(begin, end);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (total + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t lo = begin + w * chunk;
    std::size_t hi = lo + chunk < end ? lo + chunk : end;
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace kronml
