#pragma once

#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace svde {

/// Worker count from SVDE_THREADS; unset, empty or "0" means one worker per
/// hardware thread. Results never depend on this value: parallel loops write
/// to disjoint pre-sized slots and reductions run sequentially afterwards.
inline std::size_t worker_count() {
  const char* env = std::getenv("SVDE_THREADS");
  std::size_t want = 0;
  if (env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long parsed = std::strtoul(env, &end, 10);
    if (end != nullptr && *end == '\0') want = static_cast<std::size_t>(parsed);
  }
  if (want == 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    want = hw == 0 ? 1 : hw;
  }
  return want < 1 ? 1 : want;
}

/// Run body(i) for i in [0, n) across worker threads in contiguous blocks.
/// The first exception thrown by any worker is rethrown on the caller.
template <typename Body>
void parallel_for_index(std::size_t n, Body&& body) {
  const std::size_t workers = std::min(worker_count(), n == 0 ? std::size_t{1} : n);
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(begin + chunk, n);
    if (begin >= end) break;
    pool.emplace_back([&body, &errors, w, begin, end]() {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace svde
