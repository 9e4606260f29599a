#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace tnoodl {

// Worker count for the data-parallel maps. Results never depend on it.
struct Exec {
  unsigned threads = 1;
};

// Runs fn(begin, end) over a static partition of [0, count). The first
// exception thrown by any chunk is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t count, Exec exec, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, exec.threads), count);
  if (workers <= 1) {
    if (count > 0) fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (count + workers - 1) / workers;
  auto run = [&](std::size_t w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) return;
    try {
      fn(begin, end);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run, w);
  run(0);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace tnoodl
