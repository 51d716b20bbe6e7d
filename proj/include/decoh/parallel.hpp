#pragma once
// Deterministic parallel map: work items are evaluated into a fixed-order
// buffer by static chunking, then reduced sequentially, so results do not
// depend on the worker count.

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace decoh {

inline std::atomic<int>& max_threads_slot() {
  static std::atomic<int> n{0};  // 0 = use hardware concurrency
  return n;
}

inline void set_max_threads(int n) { max_threads_slot().store(n); }

inline int effective_threads(std::size_t items) {
  int cap = max_threads_slot().load();
  if (cap <= 0) cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap <= 0) cap = 1;
  if (static_cast<std::size_t>(cap) > items) cap = static_cast<int>(items);
  return cap < 1 ? 1 : cap;
}

// Evaluates fn(i) for i in [0, n) into a vector, possibly on several threads.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn) {
  std::vector<T> out(n);
  const int nt = effective_threads(n);
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      out[i] = fn(i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace decoh
