// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "optstop/sampling.hpp"

namespace optstop {

/// Number of multi-indices (i_1,...,i_n) with total degree <= p, i.e.
/// (p+n)!/(p! n!). Throws std::overflow_error when the count does not fit.
std::size_t basis_count(int n, int p);

/// All multi-indices with total degree <= p in graded lexicographic order:
/// by total degree first, then lexicographically with the first component
/// most significant ((0,2) < (1,1) < (2,0)).
struct MultiIndexSet {
  int dim = 0;
  int max_degree = 0;
  std::vector<std::vector<int>> indices;

  std::size_t size() const { return indices.size(); }
};

MultiIndexSet enumerate_indices(int n, int p);

/// Probabilists' Hermite polynomial of the given degree divided by
/// sqrt(degree!), so the family is orthonormal under the standard normal
/// density. Evaluated by the three-term recurrence.
double hermite_1d(int degree, double y);

/// Fills out[0..max_degree] with hermite_1d(i, y) in one recurrence pass.
void hermite_column(int max_degree, double y, double* out);

enum class BasisKind { hermite_orthonormal, augmented };

/// A function appended to the polynomial family and orthonormalized against
/// everything before it (empirically, on a fixed sample batch):
///   value(x) = inv_norm * (raw(x) - sum_k proj[k] * basis_k(x)).
struct AugmentedFunction {
  std::function<double(const double*)> raw;
  Eigen::VectorXd proj;
  double inv_norm = 1.0;
  std::string label;
};

struct BasisWorkspace {
  std::vector<double> hermite;  // dim * (max_degree+1) scratch
  std::vector<double> values;   // scratch for augmented evaluation
};

/// Tensor-Hermite basis in log coordinates: the k-th function is
///   prod_j hermite_1d(i_j, (ln x_j - log_mean)/log_sd)
/// for the k-th multi-index, orthonormal in L2(mu) by construction.
/// `augmented` systems carry extra orthonormalized functions at the end.
struct BasisSystem {
  MultiIndexSet index_set;
  MuParams mu;
  BasisKind kind = BasisKind::hermite_orthonormal;
  std::vector<AugmentedFunction> extra;

  std::size_t size() const { return index_set.size() + extra.size(); }

  double eval(std::size_t k, const double* x) const;
  /// Fills out[0..size()) with all basis values at x. Rejects non-positive
  /// coordinates. The workspace overload avoids per-call allocation.
  void eval_all(const double* x, double* out) const;
  void eval_all(const double* x, double* out, BasisWorkspace& ws) const;
};

BasisSystem hermite_basis(int n, int p, const MuParams& mu);

enum class GramProvenance { exact_identity, monte_carlo, quadrature };

/// Symmetric positive-definite matrix of basis inner products under mu,
/// factored once at construction (identity skips the solve entirely).
class GramMatrix {
 public:
  static GramMatrix identity(std::size_t k);
  static GramMatrix from_estimate(Eigen::MatrixXd g, GramProvenance provenance);

  bool is_identity() const { return provenance_ == GramProvenance::exact_identity; }
  GramProvenance provenance() const { return provenance_; }
  Eigen::Index size() const { return matrix_.rows(); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  double min_eigenvalue() const { return min_eig_; }
  double max_eigenvalue() const { return max_eig_; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  Eigen::MatrixXd matrix_;
  GramProvenance provenance_ = GramProvenance::exact_identity;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double min_eig_ = 1.0;
  double max_eig_ = 1.0;
};

/// Gram matrix of the system. hermite_orthonormal systems yield the exact
/// identity. Estimated provenances need mu-samples (count x dim, row-major)
/// for monte_carlo, or use tensor Gauss–Hermite quadrature (dim <= 3).
/// Fails if the estimate is numerically singular
/// (min eigenvalue < 1e-10 * max eigenvalue).
GramMatrix gram(const BasisSystem& system, GramProvenance provenance,
                std::span<const double> samples = {}, int quadrature_points = 64,
                int threads = 1);

struct AugmentResult {
  BasisSystem system;
  std::vector<std::string> dropped;  // labels of directions with residual < 1e-8
};

/// Appends `fn` to the system and orthonormalizes it against all existing
/// functions with modified Gram–Schmidt in the sample-based inner product
/// (re-orthogonalization sweeps make in-span residuals collapse to rounding
/// noise). Deterministic given the samples.
AugmentResult orthonormalize_augmented(const BasisSystem& system,
                                       std::function<double(const double*)> fn,
                                       const std::string& label,
                                       std::span<const double> samples);

}  // namespace optstop
