#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace cyldepth {

/// Number of worker threads used by parallel_for. Defaults to the
/// CYLDEPTH_THREADS environment variable, else hardware concurrency.
unsigned thread_count();
void set_thread_count(unsigned n);

/// Runs body(i) for i in [0, n). Each index must write only its own output
/// slot; reductions happen afterwards in index order so results never
/// depend on the thread count.
template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t min_chunk = 256) {
  const std::size_t workers =
      std::min<std::size_t>(thread_count(), (n + min_chunk - 1) / std::max<std::size_t>(min_chunk, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace cyldepth
