// SPDX-License-Identifier: MIT
#include "optstop/basis.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "optstop/parallel.hpp"
#include "optstop/quadrature.hpp"

namespace optstop {

std::size_t basis_count(int n, int p) {
  if (n < 1 || p < 0) throw std::invalid_argument("basis_count: need n >= 1, p >= 0");
  constexpr std::size_t kLimit = std::size_t{1} << 31;
  std::size_t k = 1;
  for (int i = 1; i <= n; ++i) {
    if (k > kLimit / (static_cast<std::size_t>(p) + i))
      throw std::overflow_error("basis_count: index count overflows");
    k = k * (static_cast<std::size_t>(p) + i) / i;  // exact: C(p+i, i) divides stepwise
  }
  return k;
}

namespace {
void emit_indices(int remaining, int slot, std::vector<int>& current,
                  std::vector<std::vector<int>>& out) {
  if (slot + 1 == static_cast<int>(current.size())) {
    current[slot] = remaining;
    out.push_back(current);
    return;
  }
  for (int i = 0; i <= remaining; ++i) {
    current[slot] = i;
    emit_indices(remaining - i, slot + 1, current, out);
  }
}
}  // namespace

MultiIndexSet enumerate_indices(int n, int p) {
  const std::size_t expected = basis_count(n, p);
  MultiIndexSet set;
  set.dim = n;
  set.max_degree = p;
  set.indices.reserve(expected);
  std::vector<int> current(n, 0);
  for (int d = 0; d <= p; ++d) emit_indices(d, 0, current, set.indices);
  if (set.indices.size() != expected)
    throw std::logic_error("enumerate_indices: cardinality mismatch");
  return set;
}

double hermite_1d(int degree, double y) {
  if (degree < 0) throw std::invalid_argument("hermite_1d: degree must be >= 0");
  double prev = 1.0;  // degree 0
  if (degree == 0) return prev;
  double cur = y;  // degree 1
  for (int k = 1; k < degree; ++k) {
    const double next = (y * cur - std::sqrt(static_cast<double>(k)) * prev) /
                        std::sqrt(static_cast<double>(k + 1));
    prev = cur;
    cur = next;
  }
  return cur;
}

void hermite_column(int max_degree, double y, double* out) {
  out[0] = 1.0;
  if (max_degree == 0) return;
  out[1] = y;
  for (int k = 1; k < max_degree; ++k)
    out[k + 1] = (y * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) /
                 std::sqrt(static_cast<double>(k + 1));
}

namespace {
inline void fill_hermite_table(const BasisSystem& sys, const double* x, double* table) {
  const int n = sys.index_set.dim;
  const int p = sys.index_set.max_degree;
  for (int j = 0; j < n; ++j) {
    if (!(x[j] > 0.0)) throw std::domain_error("eval_basis: coordinates must be positive");
    const double y = (std::log(x[j]) - sys.mu.log_mean) / sys.mu.log_sd;
    hermite_column(p, y, table + j * (p + 1));
  }
}
}  // namespace

double BasisSystem::eval(std::size_t k, const double* x) const {
  if (k >= size()) throw std::out_of_range("BasisSystem::eval: index out of range");
  if (k >= index_set.size() || !extra.empty()) {
    // augmented functions need all predecessors; evaluate the full vector
    BasisWorkspace ws;
    std::vector<double> all(size());
    eval_all(x, all.data(), ws);
    return all[k];
  }
  const int p = index_set.max_degree;
  std::vector<double> table(index_set.dim * (p + 1));
  fill_hermite_table(*this, x, table.data());
  double prod = 1.0;
  const auto& idx = index_set.indices[k];
  for (int j = 0; j < index_set.dim; ++j) prod *= table[j * (p + 1) + idx[j]];
  return prod;
}

void BasisSystem::eval_all(const double* x, double* out) const {
  BasisWorkspace ws;
  eval_all(x, out, ws);
}

void BasisSystem::eval_all(const double* x, double* out, BasisWorkspace& ws) const {
  const int n = index_set.dim;
  const int p = index_set.max_degree;
  ws.hermite.resize(static_cast<std::size_t>(n) * (p + 1));
  fill_hermite_table(*this, x, ws.hermite.data());
  const std::size_t base = index_set.size();
  for (std::size_t k = 0; k < base; ++k) {
    const auto& idx = index_set.indices[k];
    double prod = 1.0;
    for (int j = 0; j < n; ++j) prod *= ws.hermite[j * (p + 1) + idx[j]];
    out[k] = prod;
  }
  for (std::size_t e = 0; e < extra.size(); ++e) {
    const AugmentedFunction& fn = extra[e];
    double v = fn.raw(x);
    for (Eigen::Index k = 0; k < fn.proj.size(); ++k) v -= fn.proj(k) * out[k];
    out[base + e] = fn.inv_norm * v;
  }
}

BasisSystem hermite_basis(int n, int p, const MuParams& mu) {
  mu.validate();
  if (mu.dim != n) throw std::invalid_argument("hermite_basis: mu dimension mismatch");
  BasisSystem sys;
  sys.index_set = enumerate_indices(n, p);
  sys.mu = mu;
  sys.kind = BasisKind::hermite_orthonormal;
  return sys;
}

GramMatrix GramMatrix::identity(std::size_t k) {
  GramMatrix g;
  g.matrix_ = Eigen::MatrixXd::Identity(k, k);
  g.provenance_ = GramProvenance::exact_identity;
  return g;
}

GramMatrix GramMatrix::from_estimate(Eigen::MatrixXd m, GramProvenance provenance) {
  if (provenance == GramProvenance::exact_identity)
    throw std::invalid_argument("GramMatrix: estimates cannot claim exact_identity");
  GramMatrix g;
  g.matrix_ = 0.5 * (m + m.transpose());
  g.provenance_ = provenance;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.matrix_, Eigen::EigenvaluesOnly);
  g.min_eig_ = eig.eigenvalues().minCoeff();
  g.max_eig_ = eig.eigenvalues().maxCoeff();
  if (!(g.min_eig_ > 1e-10 * g.max_eig_))
    throw std::runtime_error("GramMatrix: estimate is numerically singular");
  g.llt_.compute(g.matrix_);
  if (g.llt_.info() != Eigen::Success)
    throw std::runtime_error("GramMatrix: Cholesky factorization failed");
  return g;
}

Eigen::VectorXd GramMatrix::solve(const Eigen::VectorXd& rhs) const {
  if (is_identity()) return rhs;
  return llt_.solve(rhs);
}

GramMatrix gram(const BasisSystem& system, GramProvenance provenance,
                std::span<const double> samples, int quadrature_points, int threads) {
  const std::size_t k = system.size();
  switch (provenance) {
    case GramProvenance::exact_identity:
      if (system.kind != BasisKind::hermite_orthonormal)
        throw std::invalid_argument("gram: exact identity only for the orthonormal system");
      return GramMatrix::identity(k);

    case GramProvenance::monte_carlo: {
      const int n = system.index_set.dim;
      if (samples.empty() || samples.size() % n != 0)
        throw std::invalid_argument("gram: monte_carlo needs count x dim samples");
      const std::size_t count = samples.size() / n;
      const std::size_t blocks = num_blocks(count);
      std::vector<Eigen::MatrixXd> partial(blocks, Eigen::MatrixXd::Zero(k, k));
      parallel_blocks(count, threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
        BasisWorkspace ws;
        Eigen::VectorXd values(k);
        for (std::size_t m = begin; m < end; ++m) {
          system.eval_all(samples.data() + m * n, values.data(), ws);
          partial[b].selfadjointView<Eigen::Lower>().rankUpdate(values);
        }
      });
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(k, k);
      for (const auto& block : partial) acc += block;
      acc /= static_cast<double>(count);
      Eigen::MatrixXd full = acc.selfadjointView<Eigen::Lower>();
      return GramMatrix::from_estimate(full, GramProvenance::monte_carlo);
    }

    case GramProvenance::quadrature: {
      const int n = system.index_set.dim;
      if (n > 3) throw std::invalid_argument("gram: quadrature limited to dim <= 3");
      const GaussHermiteRule rule = gauss_hermite(quadrature_points);
      const std::size_t q = rule.nodes.size();
      std::size_t total = 1;
      for (int j = 0; j < n; ++j) total *= q;
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(k, k);
      BasisWorkspace ws;
      Eigen::VectorXd values(k);
      std::vector<double> x(n);
      for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        double w = 1.0;
        for (int j = 0; j < n; ++j) {
          const std::size_t i = rem % q;
          rem /= q;
          x[j] = std::exp(system.mu.log_mean + system.mu.log_sd * rule.nodes[i]);
          w *= rule.weights[i];
        }
        system.eval_all(x.data(), values.data(), ws);
        acc.selfadjointView<Eigen::Lower>().rankUpdate(values, w);
      }
      Eigen::MatrixXd full = acc.selfadjointView<Eigen::Lower>();
      return GramMatrix::from_estimate(full, GramProvenance::quadrature);
    }
  }
  throw std::logic_error("gram: unknown provenance");
}

AugmentResult orthonormalize_augmented(const BasisSystem& system,
                                       std::function<double(const double*)> fn,
                                       const std::string& label,
                                       std::span<const double> samples) {
  const int n = system.index_set.dim;
  if (samples.empty() || samples.size() % n != 0)
    throw std::invalid_argument("orthonormalize_augmented: need count x dim samples");
  const std::size_t count = samples.size() / n;
  const std::size_t k = system.size();

  // Basis values on the batch, column-major per function.
  Eigen::MatrixXd q(count, k);
  Eigen::VectorXd v(count);
  {
    BasisWorkspace ws;
    std::vector<double> row(k);
    for (std::size_t m = 0; m < count; ++m) {
      const double* x = samples.data() + m * n;
      system.eval_all(x, row.data(), ws);
      for (std::size_t j = 0; j < k; ++j) q(m, j) = row[j];
      v(m) = fn(x);
    }
  }

  const double scale = std::sqrt(v.squaredNorm() / count);
  Eigen::VectorXd proj = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd col_sq(k);
  for (std::size_t j = 0; j < k; ++j) col_sq(j) = q.col(j).squaredNorm();

  // Modified Gram–Schmidt sweeps in the empirical inner product; repeated
  // sweeps drive in-span residuals down to rounding noise even though the
  // sampled columns are only near-orthonormal.
  for (int sweep = 0; sweep < 4; ++sweep) {
    double largest = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double c = q.col(j).dot(v) / col_sq(j);
      v -= c * q.col(j);
      proj(j) += c;
      largest = std::max(largest, std::fabs(c));
    }
    if (largest <= 1e-14 * std::max(1.0, scale)) break;
  }

  const double norm = std::sqrt(v.squaredNorm() / count);
  AugmentResult result;
  result.system = system;
  if (norm < 1e-8) {
    result.dropped.push_back(label);
    return result;
  }
  AugmentedFunction extra;
  extra.raw = std::move(fn);
  extra.proj = proj;
  extra.inv_norm = 1.0 / norm;
  extra.label = label;
  result.system.extra.push_back(std::move(extra));
  result.system.kind = BasisKind::augmented;
  return result;
}

}  // namespace optstop
