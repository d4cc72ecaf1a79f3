#pragma once

#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

namespace renorm::par {

// Worker count from RENORM_THREADS, clamped to [1, hardware]; default 1.
inline int thread_count() {
  const char* env = std::getenv("RENORM_THREADS");
  if (env == nullptr) return 1;
  int n = std::atoi(env);
  if (n < 1) return 1;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw > 0 && n > static_cast<int>(hw)) n = static_cast<int>(hw);
  return n;
}

// Runs fn(i) for i in [0, n). Each index is processed exactly once and the
// caller sees results only through per-index slots it owns, so the outcome
// does not depend on the number of workers.
inline void for_each_index(int n, const std::function<void(int)>& fn) {
  int workers = thread_count();
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace renorm::par
