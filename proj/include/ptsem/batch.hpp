#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ptsem {

// Runs fn(i) for every i in [0, n) on up to `workers` threads. Results land
// at their input index, so output order never depends on scheduling. The
// first exception thrown by any item is rethrown after all threads join.
template <typename Result>
std::vector<Result> parallel_map(std::size_t n, int workers,
                                 const std::function<Result(std::size_t)>& fn) {
  std::vector<Result> results(n);
  if (n == 0) return results;
  std::size_t thread_count = workers < 1 ? 1 : static_cast<std::size_t>(workers);
  if (thread_count > n) thread_count = n;
  if (thread_count == 1) {
    for (std::size_t i = 0; i < n; ++i) results[i] = fn(i);
    return results;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(thread_count);
  for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

}  // namespace ptsem
