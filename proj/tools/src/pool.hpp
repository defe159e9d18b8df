#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace epicli {

// Runs fn(i) for i in [0, n) on at most `threads` workers. Results must be
// written into per-index slots, so output order never depends on
// scheduling. The exception of the lowest failing index is rethrown.
template <class F>
void parallel_for(long n, int threads, F&& fn) {
  const int w = static_cast<int>(std::clamp<long>(threads, 1, std::max(1L, n)));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(0L, n)));
  if (w == 1) {
    for (long i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    for (int k = 0; k < w; ++k)
      pool.emplace_back([&] {
        for (long i; (i = next.fetch_add(1)) < n;) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace epicli
