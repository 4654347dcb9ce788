#include "cyldepth/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace cyldepth {
namespace {

unsigned default_threads() {
  if (const char* env = std::getenv("CYLDEPTH_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<unsigned>& threads() {
  static std::atomic<unsigned> n{default_threads()};
  return n;
}

}  // namespace

unsigned thread_count() { return threads().load(); }

void set_thread_count(unsigned n) { threads().store(std::max(1u, n)); }

}  // namespace cyldepth
