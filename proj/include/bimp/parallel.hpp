#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace bimp {

/// Worker cap from the PLAN_THREADS environment variable; 1 when unset or invalid.
inline int threads_from_environment() {
  const char* value = std::getenv("PLAN_THREADS");
  if (value == nullptr) return 1;
  try {
    const int n = std::stoi(value);
    return std::max(n, 1);
  } catch (const std::exception&) {
    return 1;
  }
}

/// Calls fn(i) for i in [0, count), split into contiguous chunks over at
/// most `threads` workers. Work items must be independent; the first
/// exception thrown by any item is rethrown after all workers join.
template <typename Fn>
void parallel_for(long count, int threads, Fn&& fn) {
  if (count <= 0) return;
  const long workers = std::clamp<long>(threads, 1, count);
  if (workers == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  long failed_index = count;
  std::mutex guard;
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (long w = 0; w < workers; ++w) {
      const long begin = count * w / workers;
      const long end = count * (w + 1) / workers;
      pool.emplace_back([&, begin, end] {
        for (long i = begin; i < end; ++i) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(guard);
            // Keep the lowest failing index so the reported error is stable.
            if (i < failed_index) {
              failed_index = i;
              failure = std::current_exception();
            }
            return;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bimp
