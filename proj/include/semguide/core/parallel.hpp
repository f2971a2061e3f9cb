// SPDX-FileCopyrightText: 2026 semguide contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace semguide {

/// Worker count: SEMGUIDE_THREADS caps it, hardware concurrency is the default.
inline int worker_count() {
  static const int n = [] {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("SEMGUIDE_THREADS")) {
      int cap = std::atoi(env);
      if (cap >= 1) hw = std::min(hw, cap);
    }
    return hw;
  }();
  return n;
}

/// Run fn(begin, end) over a partition of [0, n). Each chunk writes disjoint
/// output slots, so the result is independent of the worker count.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
  const int workers = worker_count();
  if (workers <= 1 || n < 256) {
    fn(0, n);
    return;
  }
  const std::int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    const std::int64_t lo = w * chunk;
    const std::int64_t hi = std::min<std::int64_t>(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace semguide
