#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace dustlab {

// Worker count resolution: explicit argument wins, then DUSTLAB_THREADS,
// then the hardware count.
inline int default_thread_count() {
  if (const char* env = std::getenv("DUSTLAB_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

inline int resolve_threads(int requested) {
  return requested > 0 ? requested : default_thread_count();
}

// Runs work(chunk) for chunk = 0..n_chunks-1 on up to n_threads threads.
// The chunk decomposition is the caller's contract with determinism: chunk
// count and per-chunk state must not depend on n_threads, and each chunk must
// write only its own output slot.  Reduction is then done by the caller in
// chunk order.
inline void parallel_chunks(int n_chunks, int n_threads,
                            const std::function<void(int)>& work) {
  n_threads = resolve_threads(n_threads);
  if (n_threads > n_chunks) n_threads = n_chunks;
  if (n_chunks <= 0) return;
  if (n_threads <= 1) {
    for (int c = 0; c < n_chunks; ++c) work(c);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex err_mutex;
  auto body = [&] {
    for (;;) {
      int c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= n_chunks) return;
      try {
        work(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Standard chunk count for sample loops: fixed so results are independent of
// the worker count, small enough that per-chunk setup stays negligible.
inline int sample_chunk_count(std::size_t n_samples) {
  const std::size_t kChunks = 256;
  if (n_samples == 0) return 0;
  return static_cast<int>(n_samples < kChunks ? n_samples : kChunks);
}

// Half-open sample range handled by chunk c of n_chunks.
inline std::pair<std::size_t, std::size_t> chunk_range(std::size_t n_samples,
                                                       int n_chunks, int c) {
  std::size_t lo = n_samples * static_cast<std::size_t>(c) /
                   static_cast<std::size_t>(n_chunks);
  std::size_t hi = n_samples * static_cast<std::size_t>(c + 1) /
                   static_cast<std::size_t>(n_chunks);
  return {lo, hi};
}

}  // namespace dustlab
