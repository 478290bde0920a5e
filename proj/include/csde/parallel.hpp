#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace csde {

/// Number of worker threads to use for `requested` (0 = all hardware threads).
inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs body(worker_id, item) for item = 0..count-1 on `threads` workers.
/// Items are claimed from a shared atomic counter, so the work assignment
/// depends on scheduling -- callers that need deterministic results must
/// write into per-item slots and reduce afterwards.
template <class Body>
void parallel_for(std::int64_t count, int threads, Body&& body) {
  threads = resolve_thread_count(threads);
  if (threads == 1 || count <= 1) {
    for (std::int64_t i = 0; i < count; ++i) body(0, i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&](int worker_id) {
    try {
      for (;;) {
        std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= count) return;
        body(worker_id, i);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      next.store(count, std::memory_order_relaxed);  // drain remaining work
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Pairwise (balanced-tree) summation. The result is a fixed function of the
/// element order, independent of how the values were produced, which keeps
/// Monte Carlo reductions bit-identical across thread counts.
inline double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = values[0];
    for (std::size_t i = 1; i < n; ++i) s += values[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace csde
