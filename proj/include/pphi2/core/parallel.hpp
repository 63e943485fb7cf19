#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace pphi2 {

// worker count from PPHI2_THREADS (default 1)
inline unsigned thread_count() {
  if (const char* s = std::getenv("PPHI2_THREADS")) {
    try {
      const long v = std::stol(s);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return 1;
}

// Runs f(i) for i in [0, n). Each index must write only its own slot, so the
// result does not depend on the worker count. The exception raised by the
// lowest failing index is rethrown.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) {
          try {
            f(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace pphi2
