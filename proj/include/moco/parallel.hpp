#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace moco {

inline int default_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(chunk_index, begin, end) over contiguous chunks of [0, n).
//
// The chunk decomposition depends only on (n, threads), never on scheduling,
// so callers can produce bitwise-identical results by reducing per-chunk
// partials in chunk order.
inline void parallel_chunks(std::int64_t n, int threads,
                            const std::function<void(int, std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  const int nchunks = static_cast<int>(std::min<std::int64_t>(std::max(threads, 1), n));
  std::vector<std::int64_t> bounds(static_cast<std::size_t>(nchunks) + 1);
  for (int c = 0; c <= nchunks; ++c) bounds[c] = n * c / nchunks;
  if (nchunks == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nchunks));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nchunks));
  for (int c = 0; c < nchunks; ++c) {
    pool.emplace_back([&, c] {
      try {
        fn(c, bounds[c], bounds[c + 1]);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline int num_chunks(std::int64_t n, int threads) {
  if (n <= 0) return 0;
  return static_cast<int>(std::min<std::int64_t>(std::max(threads, 1), n));
}

}  // namespace moco
