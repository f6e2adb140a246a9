// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "optstop/counters.hpp"
#include "optstop/parallel.hpp"
#include "optstop/regression.hpp"

namespace optstop::detail {

// Backward pseudo-regression cores, shared between the market model and the
// finite-chain oracle. A Problem supplies:
//
//   using Scratch = ...;                // default-constructible, per-worker
//   int dates() const;                  // J >= 1
//   int dim() const;                    // state vector length
//   std::size_t basis_size() const;     // K
//   const GramMatrix& gram() const;
//   void draw_mu(std::size_t m, double* out, Scratch&) const;
//   void transition(const double* x, int to_date, std::uint64_t slot,
//                   double* out, Scratch&) const;
//       // one-step sample into `to_date`; equal slots reproduce the same
//       // innovation, distinct slots are independent
//   double payoff(int j, const double* x) const;             // f_j, j = 0..J
//   void basis_values(const double* x, double* out, Scratch&) const;
//
// Both cores return the continuation coefficient stack: result[j] holds the
// coefficients of c_j for j = 0..J-1 (c_J is identically zero).

struct InductionOptions {
  bool reuse_samples = true;  // time-homogeneous sample reuse
  int threads = 1;
  bool clip = false;  // clamp continuation values into [0, clip_bound]
  double clip_bound = 0.0;
};

template <class Problem>
void build_mu_design(const Problem& pb, std::size_t count, std::vector<double>& u,
                     Eigen::MatrixXd& design, int threads, CostCounters* counters) {
  const int n = pb.dim();
  const std::size_t k = pb.basis_size();
  u.resize(count * n);
  design.resize(count, k);
  parallel_blocks(count, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    typename Problem::Scratch scratch;
    std::vector<double> row(k);
    for (std::size_t m = begin; m < end; ++m) {
      pb.draw_mu(m, u.data() + m * n, scratch);
      pb.basis_values(u.data() + m * n, row.data(), scratch);
      for (std::size_t c = 0; c < k; ++c) design(m, c) = row[c];
    }
  });
  if (counters) counters->basis_evals += count * static_cast<std::uint64_t>(k);
}

template <class Problem>
std::vector<Eigen::VectorXd> tv_pseudo_core(const Problem& pb, std::size_t count,
                                            const InductionOptions& options,
                                            CostCounters* counters) {
  if (count == 0) throw std::invalid_argument("tv_pseudo: sample count must be >= 1");
  const int num_dates = pb.dates();
  const int n = pb.dim();
  const std::size_t k = pb.basis_size();

  std::vector<double> u;
  Eigen::MatrixXd design;
  build_mu_design(pb, count, u, design, options.threads, counters);

  std::vector<double> moved(count * n);
  Eigen::MatrixXd moved_basis(count, k);
  Eigen::VectorXd responses(count);
  std::vector<Eigen::VectorXd> coefs(num_dates);

  for (int j = num_dates; j >= 1; --j) {
    if (j == num_dates || !options.reuse_samples) {
      const std::uint64_t tag = options.reuse_samples ? 0 : static_cast<std::uint64_t>(j - 1);
      parallel_blocks(count, options.threads, [&](std::size_t, std::size_t begin,
                                                  std::size_t end) {
        typename Problem::Scratch scratch;
        std::vector<double> row(k);
        for (std::size_t m = begin; m < end; ++m) {
          pb.transition(u.data() + m * n, j, tag * count + m, moved.data() + m * n, scratch);
          pb.basis_values(moved.data() + m * n, row.data(), scratch);
          for (std::size_t c = 0; c < k; ++c) moved_basis(m, c) = row[c];
        }
      });
      if (counters) {
        counters->sim_steps += count;
        counters->basis_evals += count * static_cast<std::uint64_t>(k);
      }
    }

    if (j == num_dates) {
      for (std::size_t m = 0; m < count; ++m) responses(m) = pb.payoff(j, moved.data() + m * n);
    } else {
      Eigen::VectorXd cont = moved_basis * coefs[j];
      if (counters) counters->flops += count * static_cast<std::uint64_t>(k);
      for (std::size_t m = 0; m < count; ++m) {
        double c = cont(m);
        if (options.clip) c = truncate_value(c, options.clip_bound, true);
        responses(m) = std::max(pb.payoff(j, moved.data() + m * n), c);
      }
    }
    coefs[j - 1] = fit_pseudo(design, responses, pb.gram(), counters).beta;
  }
  return coefs;
}

template <class Problem>
std::vector<Eigen::VectorXd> ls_pseudo_core(const Problem& pb, std::size_t count,
                                            const InductionOptions& options,
                                            CostCounters* counters) {
  if (count == 0) throw std::invalid_argument("ls_pseudo: sample count must be >= 1");
  const int num_dates = pb.dates();
  const int n = pb.dim();
  const std::size_t k = pb.basis_size();

  std::vector<double> u;
  Eigen::MatrixXd design;
  build_mu_design(pb, count, u, design, options.threads, counters);

  // Shifted reuse simulates one batch of full trajectories from mu and reads
  // the date-(j-1) sub-trajectory as X_r = paths(m, r-j+1); the fresh mode
  // re-simulates the continuation trajectory at every backward step.
  std::vector<double> paths;
  const auto path_state = [&](std::size_t m, int r) {
    return paths.data() + (m * static_cast<std::size_t>(num_dates + 1) + r) * n;
  };
  if (options.reuse_samples) {
    paths.resize(count * static_cast<std::size_t>(num_dates + 1) * n);
    parallel_blocks(count, options.threads, [&](std::size_t, std::size_t begin,
                                                std::size_t end) {
      typename Problem::Scratch scratch;
      for (std::size_t m = begin; m < end; ++m) {
        double* first = path_state(m, 0);
        for (int c = 0; c < n; ++c) first[c] = u[m * n + c];
        for (int r = 1; r <= num_dates; ++r)
          pb.transition(path_state(m, r - 1), r, static_cast<std::uint64_t>(r - 1) * count + m,
                        path_state(m, r), scratch);
      }
    });
    if (counters) counters->sim_steps += count * static_cast<std::uint64_t>(num_dates);
  }

  std::vector<double> fresh;
  Eigen::VectorXd responses(count);
  std::vector<Eigen::VectorXd> coefs(num_dates);

  for (int j = num_dates; j >= 1; --j) {
    const int span = num_dates - j + 1;  // states at dates j..J
    if (!options.reuse_samples) {
      fresh.resize(count * static_cast<std::size_t>(span) * n);
      parallel_blocks(count, options.threads, [&](std::size_t, std::size_t begin,
                                                  std::size_t end) {
        typename Problem::Scratch scratch;
        for (std::size_t m = begin; m < end; ++m) {
          const double* prev = u.data() + m * n;
          for (int r = j; r <= num_dates; ++r) {
            double* cur = fresh.data() + (m * static_cast<std::size_t>(span) + (r - j)) * n;
            const std::uint64_t slot =
                (static_cast<std::uint64_t>(j) * (num_dates + 1) + (r - j)) * count + m;
            pb.transition(prev, r, slot, cur, scratch);
            prev = cur;
          }
        }
      });
      if (counters) counters->sim_steps += count * static_cast<std::uint64_t>(span);
    }

    const std::size_t blocks = num_blocks(count);
    std::vector<std::uint64_t> scan_evals(blocks, 0);
    parallel_blocks(count, options.threads, [&](std::size_t b, std::size_t begin,
                                                std::size_t end) {
      typename Problem::Scratch scratch;
      std::vector<double> row(k);
      for (std::size_t m = begin; m < end; ++m) {
        for (int r = j; r <= num_dates; ++r) {
          const double* x =
              options.reuse_samples
                  ? path_state(m, r - j + 1)
                  : fresh.data() + (m * static_cast<std::size_t>(span) + (r - j)) * n;
          const double exercise = pb.payoff(r, x);
          if (r == num_dates) {  // c_J = 0 and the payoff is nonnegative
            responses(m) = exercise;
            break;
          }
          pb.basis_values(x, row.data(), scratch);
          ++scan_evals[b];
          double c = 0.0;
          for (std::size_t idx = 0; idx < k; ++idx) c += coefs[r](idx) * row[idx];
          if (options.clip) c = truncate_value(c, options.clip_bound, true);
          if (exercise >= c) {  // weak inequality at training time
            responses(m) = exercise;
            break;
          }
        }
      }
    });
    if (counters) {
      std::uint64_t evals = 0;
      for (std::uint64_t e : scan_evals) evals += e;
      counters->basis_evals += evals * k;
      counters->flops += evals * k;
    }
    coefs[j - 1] = fit_pseudo(design, responses, pb.gram(), counters).beta;
  }
  return coefs;
}

}  // namespace optstop::detail
