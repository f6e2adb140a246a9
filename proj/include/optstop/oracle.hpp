// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "optstop/market.hpp"

namespace optstop {

/// Small finite-state chain with per-date payoffs, for exact backward dynamic
/// programming. One transition matrix means a time-homogeneous kernel;
/// otherwise one matrix per step (matrix r maps date r-1 to date r).
struct FiniteChain {
  int num_states = 0;
  int num_dates = 0;                         // J; payoffs given for dates 0..J
  std::vector<Eigen::VectorXd> payoffs;      // num_dates+1 vectors of length num_states
  std::vector<Eigen::MatrixXd> transitions;  // 1 or num_dates row-stochastic matrices

  bool homogeneous() const { return transitions.size() == 1; }
  const Eigen::MatrixXd& transition(int step) const;
  void validate() const;  // rows sum to 1 within 1e-12, payoffs >= 0
};

/// Plain text chain description: `states`, `dates`, one `payoff j v1..vs`
/// line per date, and one or `dates` `transition` blocks of s rows.
FiniteChain load_chain(const std::filesystem::path& file);

/// Exact Bellman recursion: values v_j, continuations c_j = P_{j+1} v_{j+1},
/// v_j = max(payoff_j, c_j), and the optimal stopping region
/// {payoff_j >= c_j} per date.
struct ChainDpResult {
  std::vector<Eigen::VectorXd> values;         // j = 0..J
  std::vector<Eigen::VectorXd> continuations;  // j = 0..J, last is zero
  std::vector<std::vector<bool>> stop_region;  // j = 0..J
};

ChainDpResult chain_dp(const FiniteChain& chain);

/// Recombining binomial tree reference price for the single-asset model:
/// dividend-adjusted risk-neutral drift, exercise restricted to the Bermudan
/// dates. Refines as steps_per_period grows.
struct TreeSpec {
  MarketModel model;  // num_assets must be 1
  int steps_per_period = 400;
};

/// exercise_dates lists the exercise indices j in 0..J; empty means all.
double tree_price(const TreeSpec& spec, const std::vector<int>& exercise_dates = {});

/// Runs a pseudo-regression stopping algorithm on the chain with the
/// exhaustive per-state indicator basis and uniform mu (the design enumerates
/// the uniform measure exactly: sample m sits in state m mod s, so M is
/// rounded down to a multiple of s). With an exhaustive basis there is no
/// projection error and the fitted continuations must converge to the exact
/// ones at the Monte Carlo rate.
enum class PseudoVariant { tv, ls };

struct ChainEmbedConfig {
  PseudoVariant variant = PseudoVariant::tv;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  bool reuse_samples = true;  // needs a homogeneous chain
  int threads = 1;
  int se_groups = 10;  // independent sub-runs behind the batch-means SEs
};

struct ChainEmbedDate {
  Eigen::VectorXd fitted;  // estimated continuation per state
  Eigen::VectorXd exact;   // chain_dp continuation per state
  double l2_error = 0.0;   // sqrt(mean over states of squared deviation)
  // Standard error of the fitted table at the full sample count, estimated
  // by batch means over independent sub-runs; this picks up the error
  // inherited from later-date fits, which per-response variances miss.
  double l2_se = 0.0;
};

struct ChainEmbedReport {
  std::vector<ChainEmbedDate> dates;  // j = 0..J-1
  Eigen::VectorXd value0;             // max(payoff_0, fitted c_0) per state
  Eigen::VectorXd exact_value0;
  double max_value0_error = 0.0;
  std::size_t samples_used = 0;
};

ChainEmbedReport embed_chain_pricing(const FiniteChain& chain, const ChainEmbedConfig& config);

}  // namespace optstop
