// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "optstop/counters.hpp"
#include "optstop/market.hpp"
#include "optstop/rng.hpp"

namespace optstop {

/// Componentwise i.i.d. log-normal sampling measure: each coordinate of a
/// draw is exp(log_mean + log_sd * Z) with Z standard normal.
struct MuParams {
  double log_mean = 0.0;  // m
  double log_sd = 1.0;    // sigma_hat, > 0
  int dim = 1;

  void validate() const;
};

/// The measure recipe used with the max-call experiments:
///   log_mean = (rate - dividend - sigma^2/2) * t_ref + ln(spot),
/// with t_ref in [T/2, T] and log_sd in [sigma*sqrt(T/2), sigma*sqrt(T)].
MuParams lognormal_mu(const MarketModel& model, double t_ref, double sigma_hat);

/// count x dim row-major draws from mu. Consumes normal indices
/// m*dim + c on the given stream.
std::vector<double> sample_mu(const MuParams& params, std::size_t count, const RngStream& rng,
                              int threads = 1);

enum class PathOrigin { fixed_x0, sampled_from_mu };

/// M full trajectories (X_0, ..., X_J), stored row-major as
/// data[(m*(J+1) + j)*dim + c]. Bit-exactly reproducible from (seed, config).
struct TrajectoryBatch {
  std::size_t num_paths = 0;
  int steps = 0;  // J
  int dim = 0;
  PathOrigin origin = PathOrigin::fixed_x0;
  std::uint64_t seed = 0;

  std::vector<double> data;

  const double* state(std::size_t m, int j) const {
    return data.data() + (m * (steps + 1) + j) * dim;
  }
  double* state(std::size_t m, int j) { return data.data() + (m * (steps + 1) + j) * dim; }
};

/// Simulates M exact GBM trajectories over the exercise grid. Consumes
/// sub-streams {rng, rng+1}: origin draws (when sampled from mu) use indices
/// m*dim + c on rng, step normals use ((m*J) + (r-1))*dim + c on rng+1.
TrajectoryBatch simulate_paths(const MarketModel& model, PathOrigin origin,
                               const std::optional<MuParams>& mu, std::size_t count,
                               const RngStream& rng, int threads = 1,
                               CostCounters* counters = nullptr);

/// Time-shift view for a homogeneous chain: the sub-trajectory started at
/// date j-1 from U^(m) is read off a full batch as
///   X_r^{j-1,U^(m)} = batch(m, r-j+1),  r = j..J.
/// Only valid for batches sampled from mu.
struct ShiftView {
  const TrajectoryBatch* batch;
  int date;  // j

  const double* state(std::size_t m, int r) const { return batch->state(m, r - date + 1); }
};

ShiftView shift_view(const TrajectoryBatch& batch, int date);

/// Little-endian binary dump (header: magic, M, J, dim, origin, seed; then
/// the row-major doubles).
void save_batch(const TrajectoryBatch& batch, const std::filesystem::path& file);
TrajectoryBatch load_batch(const std::filesystem::path& file);

}  // namespace optstop
