// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <functional>

namespace optstop {

// Work is always split into fixed-size blocks (independent of the thread
// count); threads only decide which worker runs which block. Callers that
// reduce must accumulate per block and combine the block results in block
// order, which keeps every number in the library identical for any number of
// threads.
inline constexpr std::size_t kParallelBlock = 16384;

std::size_t num_blocks(std::size_t count, std::size_t block_size = kParallelBlock);

/// Runs body(block_index, begin, end) over the index range [0, count) split
/// into fixed-size blocks. threads <= 1 runs inline in block order.
void parallel_blocks(std::size_t count, int threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body,
                     std::size_t block_size = kParallelBlock);

}  // namespace optstop
