// SPDX-License-Identifier: MIT
#include "optstop/sampling.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "optstop/parallel.hpp"

namespace optstop {

void MuParams::validate() const {
  if (!(log_sd > 0.0)) throw std::invalid_argument("MuParams: log_sd must be > 0");
  if (dim < 1) throw std::invalid_argument("MuParams: dim must be >= 1");
}

MuParams lognormal_mu(const MarketModel& model, double t_ref, double sigma_hat) {
  model.validate();
  MuParams params;
  params.log_mean = (model.rate - model.dividend - 0.5 * model.sigma * model.sigma) * t_ref +
                    std::log(model.spot);
  params.log_sd = sigma_hat;
  params.dim = model.num_assets;
  params.validate();
  return params;
}

std::vector<double> sample_mu(const MuParams& params, std::size_t count, const RngStream& rng,
                              int threads) {
  params.validate();
  if (count == 0) throw std::invalid_argument("sample_mu: count must be >= 1");
  const int n = params.dim;
  std::vector<double> out(count * n);
  parallel_blocks(count, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::span<double> slice(out.data() + begin * n, (end - begin) * n);
    fill_normals(rng, begin * static_cast<std::uint64_t>(n), slice);
    for (double& v : slice) v = std::exp(params.log_mean + params.log_sd * v);
  });
  return out;
}

TrajectoryBatch simulate_paths(const MarketModel& model, PathOrigin origin,
                               const std::optional<MuParams>& mu, std::size_t count,
                               const RngStream& rng, int threads, CostCounters* counters) {
  model.validate();
  if (count == 0) throw std::invalid_argument("simulate_paths: count must be >= 1");
  if (origin == PathOrigin::sampled_from_mu && !mu)
    throw std::invalid_argument("simulate_paths: mu parameters required for sampled_from_mu");
  if (mu && mu->dim != model.num_assets)
    throw std::invalid_argument("simulate_paths: mu dimension must match num_assets");

  const int n = model.num_assets;
  const int steps = model.exercise_steps;
  TrajectoryBatch batch;
  batch.num_paths = count;
  batch.steps = steps;
  batch.dim = n;
  batch.origin = origin;
  batch.seed = rng.seed;
  batch.data.resize(count * (steps + 1) * n);

  const GbmStep tr(model, model.dt());
  const RngStream origin_rng = rng;       // mu draws
  const RngStream step_rng = rng.sub(1);  // per-step normals

  parallel_blocks(count, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<double> z(n);
    for (std::size_t m = begin; m < end; ++m) {
      double* row = batch.state(m, 0);
      if (origin == PathOrigin::fixed_x0) {
        for (int c = 0; c < n; ++c) row[c] = model.spot;
      } else {
        fill_normals(origin_rng, m * static_cast<std::uint64_t>(n), std::span<double>(row, n));
        for (int c = 0; c < n; ++c) row[c] = std::exp(mu->log_mean + mu->log_sd * row[c]);
      }
      for (int r = 1; r <= steps; ++r) {
        const std::uint64_t base =
            (m * static_cast<std::uint64_t>(steps) + (r - 1)) * static_cast<std::uint64_t>(n);
        fill_normals(step_rng, base, std::span<double>(z));
        tr.apply(batch.state(m, r - 1), z.data(), batch.state(m, r), n);
      }
    }
  });
  if (counters) counters->sim_steps += count * static_cast<std::uint64_t>(steps);
  return batch;
}

ShiftView shift_view(const TrajectoryBatch& batch, int date) {
  if (batch.origin != PathOrigin::sampled_from_mu)
    throw std::invalid_argument("shift_view: batch must be sampled from mu");
  if (date < 1 || date > batch.steps) throw std::out_of_range("shift_view: date out of range");
  return ShiftView{&batch, date};
}

namespace {
constexpr char kBatchMagic[8] = {'T', 'B', 'A', 'T', 'C', 'H', '0', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}
}  // namespace

void save_batch(const TrajectoryBatch& batch, const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("save_batch: cannot open " + file.string());
  os.write(kBatchMagic, sizeof(kBatchMagic));
  write_u64(os, batch.num_paths);
  write_u64(os, static_cast<std::uint64_t>(batch.steps));
  write_u64(os, static_cast<std::uint64_t>(batch.dim));
  write_u64(os, batch.origin == PathOrigin::sampled_from_mu ? 1 : 0);
  write_u64(os, batch.seed);
  static_assert(sizeof(double) == 8);
  for (double v : batch.data) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(os, bits);
  }
  if (!os) throw std::runtime_error("save_batch: write failed for " + file.string());
}

TrajectoryBatch load_batch(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("load_batch: cannot open " + file.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kBatchMagic, 8) != 0)
    throw std::runtime_error("load_batch: bad header in " + file.string());
  TrajectoryBatch batch;
  batch.num_paths = read_u64(is);
  batch.steps = static_cast<int>(read_u64(is));
  batch.dim = static_cast<int>(read_u64(is));
  batch.origin = read_u64(is) ? PathOrigin::sampled_from_mu : PathOrigin::fixed_x0;
  batch.seed = read_u64(is);
  batch.data.resize(batch.num_paths * (batch.steps + 1) * batch.dim);
  for (double& v : batch.data) {
    const std::uint64_t bits = read_u64(is);
    std::memcpy(&v, &bits, 8);
  }
  if (!is) throw std::runtime_error("load_batch: truncated file " + file.string());
  return batch;
}

}  // namespace optstop
