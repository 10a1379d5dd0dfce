#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace tfp {

namespace detail {
inline std::atomic<int>& thread_count() {
  static std::atomic<int> count{1};
  return count;
}
}  // namespace detail

/// Worker threads used by the kernels. Values below 1 are clamped to 1.
inline void set_num_threads(int n) { detail::thread_count().store(std::max(1, n)); }
inline int num_threads() { return detail::thread_count().load(); }

/// Runs `body(i)` for every i in [begin, end), split into contiguous chunks
/// across worker threads. Each index is processed by exactly one thread, so
/// results do not depend on the thread count as long as `body` only writes
/// state owned by its index.
template <typename Body>
void parallel_for(Eigen::Index begin, Eigen::Index end, Body&& body) {
  const Eigen::Index total = end - begin;
  const Eigen::Index workers = std::min<Eigen::Index>(num_threads(), total);
  if (workers <= 1) {
    for (Eigen::Index i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const Eigen::Index chunk = (total + workers - 1) / workers;
  for (Eigen::Index lo = begin; lo < end; lo += chunk) {
    const Eigen::Index hi = std::min(end, lo + chunk);
    pool.emplace_back([lo, hi, &body] {
      for (Eigen::Index i = lo; i < hi; ++i) body(i);
    });
  }
}

}  // namespace tfp
