// SPDX-License-Identifier: MIT
#include "optstop/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace optstop {

std::size_t num_blocks(std::size_t count, std::size_t block_size) {
  return (count + block_size - 1) / block_size;
}

void parallel_blocks(std::size_t count, int threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body,
                     std::size_t block_size) {
  const std::size_t blocks = num_blocks(count, block_size);
  if (blocks == 0) return;

  auto run_block = [&](std::size_t b) {
    const std::size_t begin = b * block_size;
    const std::size_t end = std::min(begin + block_size, count);
    body(b, begin, end);
  };

  const std::size_t workers =
      std::min<std::size_t>(threads > 1 ? static_cast<std::size_t>(threads) : 1, blocks);
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t b = next.fetch_add(1);
        if (b >= blocks || failed.load()) return;
        try {
          run_block(b);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace optstop
