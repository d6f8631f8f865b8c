#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace adrf {

//! Number of workers used when a caller passes threads = 0.
inline unsigned
default_threads()
{
  return std::max(1u, std::thread::hardware_concurrency());
}

//! Runs fn(i) for i in [0, n) on up to `threads` workers. Work items must
//! write only to their own output slots; the first exception is rethrown.
template<class Fn>
void
parallel_for(std::size_t n, unsigned threads, Fn&& fn)
{
  if (threads == 0) {
    threads = default_threads();
  }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{ 0 };
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) {
        return;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        next.store(n);
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back(worker);
  }
  pool.clear();
  if (failure) {
    std::rethrow_exception(failure);
  }
}

} // namespace adrf
