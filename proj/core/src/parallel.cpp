#include <functional>
#include <thread>
#include <vector>

#include "cyldet/conv.hpp"

namespace cyldet::detail {

// Splits [0, count) into contiguous chunks, one per worker. Each chunk owns
// disjoint output, so results do not depend on the worker count.
void parallel_for(int64_t count, int threads, const std::function<void(int64_t, int64_t)>& body) {
  threads = std::max(1, threads);
  if (threads == 1 || count <= 1) {
    body(0, count);
    return;
  }
  int64_t n_chunks = std::min<int64_t>(threads, count);
  int64_t per = (count + n_chunks - 1) / n_chunks;
  std::vector<std::thread> workers;
  workers.reserve(static_cast<size_t>(n_chunks));
  for (int64_t c = 0; c < n_chunks; ++c) {
    int64_t lo = std::min(count, c * per);
    int64_t hi = std::min(count, lo + per);
    if (lo >= hi) break;
    workers.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& w : workers) w.join();
}

}  // namespace cyldet::detail
