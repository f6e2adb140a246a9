// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "optstop/basis.hpp"
#include "optstop/counters.hpp"

namespace optstop {

enum class FitMethod { standard_lsq, pseudo };

struct RegressionFit {
  Eigen::VectorXd beta;
  FitMethod method = FitMethod::pseudo;
  Eigen::Index sample_count = 0;
  Eigen::Index effective_rank = 0;
  bool rank_deficient = false;  // standard fit found rank < K; beta is minimum-norm
};

/// Least-squares coefficients for design (M x K) and responses y, solved by a
/// rank-revealing orthogonal decomposition. Requires M >= K; if the effective
/// rank is below K the minimum-norm minimizer is returned and the fit is
/// flagged rank_deficient.
RegressionFit fit_standard(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                           CostCounters* counters = nullptr);

/// Pseudo-regression projection coefficients (1/M) G^{-1} design^T y. With an
/// exact-identity Gram there is no solve at all.
RegressionFit fit_pseudo(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                         const GramMatrix& gram, CostCounters* counters = nullptr);

/// sum_k beta_k psi_k(x).
double eval_fit(const RegressionFit& fit, const BasisSystem& system, const double* x);

/// Clamps a fitted value to [0, bound] in nonnegative mode, else to
/// [-bound, bound].
double truncate_value(double value, double bound, bool nonnegative);

/// Empirical L2(mu) error study of the two estimators on a synthetic target
/// with known expansion, following the K/M accuracy bounds: for each
/// (K, M) grid point the mean squared error over the replications is
/// reported together with the analytic projection error; the variance term
/// is their difference. Slopes are log-log fits of the variance term vs M.
struct MseDiagnosticConfig {
  FitMethod method = FitMethod::pseudo;
  MuParams mu;                    // sampling measure, dim = n
  int target_degree = 0;          // the target u lives on enumerate_indices(n, target_degree)
  Eigen::VectorXd target_coefs;   // coefficients of u in that graded-lex basis
  double noise_sd = 0.0;          // sd of Y - u(U) given U
  std::vector<std::size_t> k_grid;  // prefix sizes of the graded-lex basis
  std::vector<std::size_t> m_grid;
  int replications = 1;
  std::uint64_t seed = 0;
  int quadrature_points = 200;   // error integration for n = 1
  std::size_t check_samples = 100000;  // fresh-sample error estimate for n > 1
};

struct MseRow {
  std::size_t basis_size = 0;
  std::size_t sample_count = 0;
  double mean_sq_error = 0.0;
  double projection_error = 0.0;  // analytic squared bias
  double variance_term = 0.0;     // mean_sq_error - projection_error
};

struct MseDiagnostic {
  std::vector<MseRow> rows;
  std::vector<double> slope_vs_m;  // one slope per k_grid entry
};

MseDiagnostic mse_diagnostic(const MseDiagnosticConfig& config);

/// Least-squares slope of ln(y) against ln(x); helper shared by the
/// diagnostics and the cost reports.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace optstop
