#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace psr::parallel {

/// Thread budget used by every parallel loop in the library. Zero restores the
/// default (PSR_THREADS from the environment, else the hardware concurrency).
void set_thread_count(unsigned count);
unsigned thread_count();

/// Splits [0, n) into contiguous chunks and calls body(begin, end) on each.
/// Callers only write to locations owned by their chunk, so results do not
/// depend on the number of threads.
template <class Body>
void for_range(std::size_t n, Body&& body, std::size_t min_chunk = 1) {
  const std::size_t budget = thread_count();
  const std::size_t chunks =
      std::min<std::size_t>(budget, std::max<std::size_t>(1, n / std::max<std::size_t>(1, min_chunk)));
  if (chunks <= 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(chunks - 1);
  const std::size_t step = (n + chunks - 1) / chunks;
  for (std::size_t c = 1; c < chunks; ++c) {
    const std::size_t begin = std::min(n, c * step);
    const std::size_t end = std::min(n, begin + step);
    if (begin < end) workers.emplace_back([&body, begin, end] { body(begin, end); });
  }
  body(std::size_t{0}, std::min(n, step));
}

}  // namespace psr::parallel
