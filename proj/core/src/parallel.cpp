#include "cdist/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cdist {

int eval_thread_count() {
  const char* raw = std::getenv("CASCADE_DISTILL_THREADS");
  if (!raw) return 1;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (end == raw || v <= 0) return 1;
  return static_cast<int>(v);
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int threads = std::min(eval_thread_count(), n);
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run_chunk = [&](int lo, int hi) {
    try {
      for (int i = lo; i < hi; ++i) fn(i);
    } catch (...) {
      const std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads);
  const int base = n / threads;
  const int extra = n % threads;
  int lo = 0;
  for (int t = 0; t < threads; ++t) {
    const int hi = lo + base + (t < extra ? 1 : 0);
    pool.emplace_back(run_chunk, lo, hi);
    lo = hi;
  }
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace cdist
