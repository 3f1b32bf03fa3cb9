#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace qi {

// Worker count for parallel regions: the QI_THREADS environment variable
// when set (clamped to >= 1), otherwise hardware concurrency. Results never
// depend on this value, only wall time does.
inline int worker_count() {
  if (const char* env = std::getenv("QI_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env) return static_cast<int>(std::max(1L, std::min(v, 256L)));
  }
  int n = static_cast<int>(std::thread::hardware_concurrency());
  return n < 1 ? 1 : n;
}

// Runs fn(lo, hi) over a partition of [0, n). Each chunk writes only its own
// slots, so results are identical for any worker count.
inline void parallel_for(long n, int workers, const std::function<void(long, long)>& fn) {
  if (n <= 0) return;
  if (workers > n) workers = static_cast<int>(n);
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const long chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const long lo = w * chunk;
    const long hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

// Shortest-width formatting is not stable enough for byte-compared output
// files, so all floating-point CSV fields go through this.
inline std::string format_g9(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

}  // namespace qi
