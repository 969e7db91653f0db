#include "cpesim/util.hpp"

#include <algorithm>
#include <atomic>

namespace cpesim {

namespace {
std::atomic<int> g_threads{1};
}

int thread_count() { return g_threads.load(); }

void set_thread_count(int n) { g_threads.store(std::max(1, n)); }

void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end,
                  const std::function<void(std::ptrdiff_t, std::ptrdiff_t)>& body) {
  const std::ptrdiff_t n = end - begin;
  if (n <= 0) return;
  const int nt = std::min<std::ptrdiff_t>(thread_count(), n);
  if (nt <= 1) {
    body(begin, end);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(nt);
  const std::ptrdiff_t chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    const std::ptrdiff_t b = begin + t * chunk;
    const std::ptrdiff_t e = std::min(end, b + chunk);
    if (b >= e) break;
    workers.emplace_back([&body, b, e] { body(b, e); });
  }
  for (auto& w : workers) w.join();
}

}  // namespace cpesim
