// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tvae {

// Calls fn(i, worker) for i in [0, count) on up to `workers` threads. Work items are
// handed out dynamically, so fn must only write to state owned by item i or by worker.
// The first exception thrown by any item is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  const unsigned n_threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1U, workers), count));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i, 0U);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&](unsigned worker) {
    try {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i, worker);
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
      next.store(count);
    }
  };
  std::vector<std::jthread> threads;
  threads.reserve(n_threads - 1);
  for (unsigned w = 1; w < n_threads; ++w) threads.emplace_back(body, w);
  body(0);
  threads.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace tvae
