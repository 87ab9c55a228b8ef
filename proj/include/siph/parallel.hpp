#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace siph {

/// Fixed chunk size used by every sampling probe. Results depend on the chunk
/// layout, never on the number of worker threads.
inline constexpr std::size_t kChunkSize = 512;

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs fn(chunk_index, begin, end) over [0, total) in fixed-size chunks and
/// returns the per-chunk results in chunk order.
template <class Result, class Fn>
std::vector<Result> map_chunks(std::size_t total, unsigned threads, Fn&& fn,
                               std::size_t chunk_size = kChunkSize) {
  const std::size_t chunks = (total + chunk_size - 1) / chunk_size;
  std::vector<Result> results(chunks);
  if (chunks == 0) return results;

  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), chunks));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        const std::size_t begin = c * chunk_size;
        results[c] = fn(c, begin, std::min(total, begin + chunk_size));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace siph
