#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace packiht {

// Splits [0, count) into `workers` contiguous chunks and runs fn(begin, end)
// on each. The caller's thread handles the last chunk. The first exception
// thrown by any chunk is rethrown after all chunks finish.
template <typename Fn>
void parallel_for_chunks(std::size_t count, int workers, Fn&& fn) {
  const std::size_t chunks =
      std::max<std::size_t>(1, std::min<std::size_t>(count, workers < 1 ? 1 : workers));
  if (chunks == 1) {
    if (count > 0) fn(std::size_t{0}, count);
    return;
  }
  const std::size_t base = count / chunks;
  const std::size_t extra = count % chunks;
  auto bounds = [&](std::size_t c) {
    const std::size_t begin = c * base + std::min(c, extra);
    return std::pair{begin, begin + base + (c < extra ? 1 : 0)};
  };

  std::vector<std::exception_ptr> errors(chunks);
  {
    std::vector<std::jthread> pool;
    pool.reserve(chunks - 1);
    for (std::size_t c = 0; c + 1 < chunks; ++c) {
      pool.emplace_back([&, c] {
        try {
          auto [b, e] = bounds(c);
          fn(b, e);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
    try {
      auto [b, e] = bounds(chunks - 1);
      fn(b, e);
    } catch (...) {
      errors[chunks - 1] = std::current_exception();
    }
  }
  for (auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace packiht
