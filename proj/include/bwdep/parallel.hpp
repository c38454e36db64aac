#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bwdep {

// Worker count: explicit override, else BWDEP_THREADS, else hardware concurrency.
inline std::atomic<int>& thread_override() {
  static std::atomic<int> value{0};
  return value;
}

inline void set_default_threads(int threads) { thread_override() = std::max(0, threads); }

inline int default_threads() {
  if (int t = thread_override().load(); t > 0) return t;
  if (const char* env = std::getenv("BWDEP_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// Each index is independent; results must be written to per-index slots so the
// outcome does not depend on scheduling.
inline bool& inside_worker() {
  thread_local bool value = false;
  return value;
}

// Runs f(i) for i in [0, n). Nested calls from a worker run serially.
template <typename F>
void parallel_for(int n, F&& f, int threads = 0) {
  if (n <= 0) return;
  const int workers = inside_worker() ? 1 : std::min(n, threads > 0 ? threads : default_threads());
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first;
  std::mutex guard;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      inside_worker() = true;
      for (int i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(guard);
          if (!first) first = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace bwdep
