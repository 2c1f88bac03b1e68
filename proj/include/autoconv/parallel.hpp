#pragma once

// Minimal fork-join helper for the per-output-node quadrature loops.
// Thread count is capped by the AUTOCONV_THREADS environment variable
// (0 or unset = auto). Each index is processed independently and in a
// fixed order within its chunk, so results do not depend on the schedule.

#include <cstdlib>
#include <thread>
#include <vector>

namespace autoconv::detail {

inline unsigned max_threads() {
  static const unsigned cached = [] {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("AUTOCONV_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v > 0) return static_cast<unsigned>(v) < hw ? static_cast<unsigned>(v) : hw;
    }
    return hw;
  }();
  return cached;
}

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned threads = max_threads();
  if (threads <= 1 || n < 256) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (n + threads - 1) / threads;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk;
    if (lo >= n) break;
    const std::size_t hi = lo + chunk < n ? lo + chunk : n;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace autoconv::detail
