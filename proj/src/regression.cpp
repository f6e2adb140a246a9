// SPDX-License-Identifier: MIT
#include "optstop/regression.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "optstop/quadrature.hpp"
#include "optstop/rng.hpp"

namespace optstop {

RegressionFit fit_standard(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                           CostCounters* counters) {
  const Eigen::Index m = design.rows();
  const Eigen::Index k = design.cols();
  if (m != y.size()) throw std::invalid_argument("fit_standard: design/response size mismatch");
  if (m < k) throw std::invalid_argument("fit_standard: need at least K samples");

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  RegressionFit fit;
  fit.beta = cod.solve(y);
  fit.method = FitMethod::standard_lsq;
  fit.sample_count = m;
  fit.effective_rank = cod.rank();
  fit.rank_deficient = cod.rank() < k;
  if (counters) {
    const auto mu = static_cast<std::uint64_t>(m);
    const auto ku = static_cast<std::uint64_t>(k);
    counters->flops += mu * ku * ku + mu * ku + ku * ku;  // QR + apply Q^T + solve
  }
  return fit;
}

namespace {
// design^T y accumulated by a pairwise tree over row ranges: the reduction
// order is fixed (thread-count independent) and rounding noise stays
// O(log M) instead of O(M).
void pairwise_rhs(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, Eigen::Index lo,
                  Eigen::Index hi, Eigen::VectorXd& out) {
  constexpr Eigen::Index kLeaf = 64;
  if (hi - lo <= kLeaf) {
    out.noalias() = design.middleRows(lo, hi - lo).transpose() * y.segment(lo, hi - lo);
    return;
  }
  const Eigen::Index mid = lo + (hi - lo) / 2;
  Eigen::VectorXd right(out.size());
  pairwise_rhs(design, y, lo, mid, out);
  pairwise_rhs(design, y, mid, hi, right);
  out += right;
}
}  // namespace

RegressionFit fit_pseudo(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                         const GramMatrix& gram, CostCounters* counters) {
  const Eigen::Index m = design.rows();
  const Eigen::Index k = design.cols();
  if (m != y.size()) throw std::invalid_argument("fit_pseudo: design/response size mismatch");
  if (gram.size() != k) throw std::invalid_argument("fit_pseudo: Gram size mismatch");

  Eigen::VectorXd rhs(k);
  pairwise_rhs(design, y, 0, m, rhs);
  rhs /= static_cast<double>(m);
  RegressionFit fit;
  fit.beta = gram.is_identity() ? std::move(rhs) : gram.solve(rhs);
  fit.method = FitMethod::pseudo;
  fit.sample_count = m;
  fit.effective_rank = k;
  if (counters) {
    const auto mu = static_cast<std::uint64_t>(m);
    const auto ku = static_cast<std::uint64_t>(k);
    counters->flops += mu * ku;
    if (!gram.is_identity()) counters->flops += ku * ku;
  }
  return fit;
}

double eval_fit(const RegressionFit& fit, const BasisSystem& system, const double* x) {
  if (static_cast<std::size_t>(fit.beta.size()) != system.size())
    throw std::invalid_argument("eval_fit: coefficient/basis size mismatch");
  std::vector<double> values(system.size());
  system.eval_all(x, values.data());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < fit.beta.size(); ++i) acc += fit.beta(i) * values[i];
  return acc;
}

double truncate_value(double value, double bound, bool nonnegative) {
  if (!(bound > 0.0)) throw std::invalid_argument("truncate_value: bound must be > 0");
  const double lo = nonnegative ? 0.0 : -bound;
  return std::min(std::max(value, lo), bound);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("loglog_slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

// u and the fitted function share the graded-lex Hermite expansion, so the
// L2(mu) error of a fit is integrated over the difference of coefficient
// vectors. For n = 1 a Gauss–Hermite rule integrates the squared difference
// exactly; for n > 1 a fresh sample batch estimates it.
double squared_error(const BasisSystem& target_basis, const Eigen::VectorXd& diff_coefs,
                     const GaussHermiteRule* rule, std::span<const double> check_points) {
  const int n = target_basis.index_set.dim;
  if (n == 1 && rule) {
    const int p = target_basis.index_set.max_degree;
    std::vector<double> column(p + 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule->nodes.size(); ++i) {
      hermite_column(p, rule->nodes[i], column.data());
      double v = 0.0;
      for (Eigen::Index k = 0; k < diff_coefs.size(); ++k) v += diff_coefs(k) * column[k];
      acc += rule->weights[i] * v * v;
    }
    return acc;
  }
  BasisWorkspace ws;
  std::vector<double> values(target_basis.size());
  double acc = 0.0;
  const std::size_t count = check_points.size() / n;
  for (std::size_t m = 0; m < count; ++m) {
    target_basis.eval_all(check_points.data() + m * n, values.data(), ws);
    double v = 0.0;
    for (Eigen::Index k = 0; k < diff_coefs.size(); ++k) v += diff_coefs(k) * values[k];
    acc += v * v;
  }
  return acc / static_cast<double>(count);
}

}  // namespace

MseDiagnostic mse_diagnostic(const MseDiagnosticConfig& config) {
  config.mu.validate();
  const int n = config.mu.dim;
  BasisSystem target = hermite_basis(n, config.target_degree, config.mu);
  const std::size_t full = target.size();
  if (static_cast<std::size_t>(config.target_coefs.size()) != full)
    throw std::invalid_argument("mse_diagnostic: target coefficients must match the index set");
  if (config.k_grid.empty() || config.m_grid.empty() || config.replications < 1)
    throw std::invalid_argument("mse_diagnostic: empty grid");
  for (std::size_t k : config.k_grid)
    if (k == 0 || k > full)
      throw std::invalid_argument("mse_diagnostic: K must be a prefix of the target basis");

  const std::size_t max_m = *std::max_element(config.m_grid.begin(), config.m_grid.end());
  GaussHermiteRule rule;
  std::vector<double> check_points;
  if (n == 1) {
    rule = gauss_hermite(config.quadrature_points);
  } else {
    check_points = sample_mu(config.mu, config.check_samples,
                             {derive_seed(config.seed, 0xC0FFEE), streams::kDiagnostics + 8});
  }

  std::vector<std::vector<double>> sum_error(config.k_grid.size(),
                                             std::vector<double>(config.m_grid.size(), 0.0));

  BasisWorkspace ws;
  Eigen::MatrixXd design(max_m, full);
  Eigen::VectorXd responses(max_m);
  std::vector<double> row(full);

  for (int rep = 0; rep < config.replications; ++rep) {
    const std::uint64_t rep_seed = derive_seed(config.seed, rep);
    const RngStream draw_rng{rep_seed, streams::kDiagnostics};
    const RngStream noise_rng{rep_seed, streams::kDiagnostics + 1};
    const std::vector<double> points = sample_mu(config.mu, max_m, draw_rng);
    for (std::size_t m = 0; m < max_m; ++m) {
      target.eval_all(points.data() + m * n, row.data(), ws);
      double u = 0.0;
      for (std::size_t k = 0; k < full; ++k) {
        design(m, k) = row[k];
        u += config.target_coefs(k) * row[k];
      }
      responses(m) = u + config.noise_sd * normal_at(noise_rng, m);
    }

    for (std::size_t ki = 0; ki < config.k_grid.size(); ++ki) {
      const std::size_t k = config.k_grid[ki];
      const GramMatrix gram_k = GramMatrix::identity(k);
      for (std::size_t mi = 0; mi < config.m_grid.size(); ++mi) {
        const std::size_t m = config.m_grid[mi];
        const auto block = design.topLeftCorner(m, k);
        const auto y = responses.head(m);
        Eigen::VectorXd beta;
        if (config.method == FitMethod::pseudo) {
          beta = fit_pseudo(block, y, gram_k).beta;
        } else {
          beta = fit_standard(block, y).beta;
        }
        Eigen::VectorXd diff = -config.target_coefs;
        diff.head(k) += beta;
        sum_error[ki][mi] +=
            squared_error(target, diff, n == 1 ? &rule : nullptr, check_points);
      }
    }
  }

  MseDiagnostic out;
  for (std::size_t ki = 0; ki < config.k_grid.size(); ++ki) {
    const std::size_t k = config.k_grid[ki];
    double projection = 0.0;
    for (std::size_t d = k; d < full; ++d)
      projection += config.target_coefs(d) * config.target_coefs(d);
    std::vector<double> m_values, var_values;
    for (std::size_t mi = 0; mi < config.m_grid.size(); ++mi) {
      MseRow rowout;
      rowout.basis_size = k;
      rowout.sample_count = config.m_grid[mi];
      rowout.mean_sq_error = sum_error[ki][mi] / config.replications;
      rowout.projection_error = projection;
      rowout.variance_term = rowout.mean_sq_error - projection;
      out.rows.push_back(rowout);
      if (rowout.variance_term > 0.0) {
        m_values.push_back(static_cast<double>(rowout.sample_count));
        var_values.push_back(rowout.variance_term);
      }
    }
    out.slope_vs_m.push_back(m_values.size() >= 2 ? loglog_slope(m_values, var_values)
                                                  : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

}  // namespace optstop
