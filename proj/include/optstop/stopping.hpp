// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Core>
#include <vector>

#include "optstop/basis.hpp"
#include "optstop/counters.hpp"
#include "optstop/market.hpp"
#include "optstop/regression.hpp"
#include "optstop/sampling.hpp"

namespace optstop {

/// Fitted continuation functions c_0..c_{J-1}; c_J is identically zero. The
/// induced stopping rule exercises at the first date whose discounted payoff
/// strictly exceeds the continuation value.
struct StoppingPolicy {
  BasisSystem basis;
  std::vector<Eigen::VectorXd> coefs;  // coefs[j] defines c_j
  FitMethod method = FitMethod::pseudo;
  bool rank_deficient = false;  // some backward fit had rank < K
  bool clip = false;            // continuation values clamped to [0, clip_bound]
  double clip_bound = 0.0;

  int dates() const { return static_cast<int>(coefs.size()); }
  double continuation(int j, const double* x) const;
  double continuation(int j, const double* x, BasisWorkspace& ws) const;
  /// max(f_j(x), c_j(x)) with f the discounted payoff.
  double value(int j, const double* x, const MarketModel& model) const;
};

struct PriceEstimate {
  double value = 0.0;
  double std_error = 0.0;
  FitMethod method = FitMethod::pseudo;
  std::size_t eval_count = 0;
};

struct PseudoOptions {
  bool reuse_samples = true;  // reuse one sample batch across all dates
  int threads = 1;
  bool clip = false;  // clamp continuation values during training, diagnostics only
  double clip_bound = 0.0;
};

/// Tsitsiklis–van Roy with standard regression on trajectories from x0:
/// backward value iteration, each continuation fitted by least squares of
/// the next-date value against the basis at the current date.
StoppingPolicy tv_standard(const TrajectoryBatch& batch, const BasisSystem& basis,
                           const MarketModel& model, CostCounters* counters = nullptr,
                           int threads = 1);

/// Longstaff–Schwartz with standard regression: per-path stopping times,
/// responses are realized stopped cash-flows, exercise update uses the strict
/// inequality.
StoppingPolicy ls_standard(const TrajectoryBatch& batch, const BasisSystem& basis,
                           const MarketModel& model, CostCounters* counters = nullptr,
                           int threads = 1);

/// Pseudo-regression Tsitsiklis–van Roy: design points are drawn once from
/// mu, responses come from one-step conditional samples, coefficients are
/// (1/M) G^{-1} M^T Y. With reuse_samples the single one-step batch serves
/// every date. Consumes sub-streams {rng, rng+1} (mu draws, step normals).
StoppingPolicy tv_pseudo(const MarketModel& model, const MuParams& mu, const BasisSystem& basis,
                         const GramMatrix& gram, std::size_t count, const RngStream& rng,
                         const PseudoOptions& options = {}, CostCounters* counters = nullptr);

/// Pseudo-regression Longstaff–Schwartz: responses are stopped cash-flows
/// along continuation trajectories started from the mu draws (weak
/// inequality at training time). With reuse_samples one batch of full
/// trajectories is time-shifted across dates.
StoppingPolicy ls_pseudo(const MarketModel& model, const MuParams& mu, const BasisSystem& basis,
                         const GramMatrix& gram, std::size_t count, const RngStream& rng,
                         const PseudoOptions& options = {}, CostCounters* counters = nullptr);

/// max(f_0(x0), c_0(x0)).
double price_at_origin(const StoppingPolicy& policy, const MarketModel& model);

/// Lower-bound estimate: simulates eval_count fresh paths from x0, stops at
/// the first date with f_j(X_j) > c_j(X_j) (at the last date any payoff is
/// taken), and returns the sample mean of the stopped discounted payoff with
/// its standard error. Pass a payoff sink to keep the per-path cash-flows.
PriceEstimate evaluate_policy(const StoppingPolicy& policy, const MarketModel& model,
                              std::size_t eval_count, const RngStream& rng, int threads = 1,
                              CostCounters* counters = nullptr,
                              std::vector<double>* payoffs_out = nullptr);

}  // namespace optstop
