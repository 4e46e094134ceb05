#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bifrom {

int default_thread_count();
void set_thread_count(int threads);

// Runs body(i) for i in [0, count) on a small thread pool. Each index writes
// only its own output slot, so results do not depend on scheduling. If any
// body throws, the exception from the lowest index is rethrown.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(default_thread_count()), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex guard;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(guard);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bifrom
