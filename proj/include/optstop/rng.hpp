// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace optstop {

// Counter-based random numbers (Philox4x32-10). Every draw is addressed by
// (seed, stream, index), so generation is reproducible bit-for-bit no matter
// how the index range is partitioned across threads. Normals come from the
// inverse standard-normal CDF (AS241) applied to a 53-bit uniform; this is
// the one normal-generation method used everywhere, so golden values stay
// stable.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;

  RngStream sub(std::uint32_t offset) const { return {seed, stream + offset}; }
};

// Well-known stream-id bases used by the library. A consumer of base id `s`
// may also use a few ids above it; allocate bases at least kStreamSpacing
// apart.
namespace streams {
inline constexpr std::uint32_t kTraining = 0;
inline constexpr std::uint32_t kEvaluation = 16;
inline constexpr std::uint32_t kGram = 32;
inline constexpr std::uint32_t kDiagnostics = 48;
inline constexpr std::uint32_t kStreamSpacing = 16;
}  // namespace streams

/// Raw Philox4x32-10 keyed permutation.
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key);

/// One 128-bit Philox4x32-10 block for (seed, stream, counter).
std::array<std::uint32_t, 4> philox_block(std::uint64_t seed, std::uint32_t stream,
                                          std::uint64_t counter);

/// Uniform draw in the open interval (0,1) at a global index.
double uniform_at(const RngStream& rng, std::uint64_t index);

/// Standard normal draw at a global index.
double normal_at(const RngStream& rng, std::uint64_t index);

/// Fills out[i] with the normal at index first_index + i. Equivalent to
/// calling normal_at per element, but computes each Philox block once.
void fill_normals(const RngStream& rng, std::uint64_t first_index, std::span<double> out);

/// Inverse of the standard normal CDF (Wichura's AS241, double precision).
double inverse_normal_cdf(double p);

/// Deterministic seed derivation for independent replications/sub-tasks.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace optstop
