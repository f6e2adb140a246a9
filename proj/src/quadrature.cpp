// SPDX-License-Identifier: MIT
#include "optstop/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace optstop {

double GaussHermiteRule::integrate(const std::function<double(double)>& f) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
  return acc;
}

GaussHermiteRule gauss_hermite(int points) {
  if (points < 1) throw std::invalid_argument("gauss_hermite: points must be >= 1");
  // Jacobi matrix of the probabilists' recurrence He_{k+1} = y He_k - k He_{k-1}:
  // zero diagonal, off-diagonal sqrt(k).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
  for (int k = 1; k < points; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("gauss_hermite: eigensolver failed");

  // Eigenvalues seed Newton iterations on the orthonormal recurrence
  // (h_n' = sqrt(n) h_{n-1}); the polished roots feed the Christoffel
  // weights w = 1 / sum_{k<n} h_k(x)^2, which beats eigenvector-based
  // weights by several digits at this size.
  GaussHermiteRule rule;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  std::vector<double> column(points + 1);
  const auto eval_column = [&](double y) {
    column[0] = 1.0;
    if (points >= 1) column[1] = y;
    for (int k = 1; k < points; ++k)
      column[k + 1] = (y * column[k] - std::sqrt(static_cast<double>(k)) * column[k - 1]) /
                      std::sqrt(static_cast<double>(k + 1));
  };
  for (int i = 0; i < points; ++i) {
    double y = solver.eigenvalues()(i);
    for (int iter = 0; iter < 4; ++iter) {
      eval_column(y);
      const double value = column[points];
      const double deriv = std::sqrt(static_cast<double>(points)) * column[points - 1];
      if (deriv == 0.0) break;
      const double delta = value / deriv;
      y -= delta;
      if (std::fabs(delta) < 1e-15 * std::max(1.0, std::fabs(y))) break;
    }
    eval_column(y);
    double christoffel = 0.0;
    for (int k = 0; k < points; ++k) christoffel += column[k] * column[k];
    rule.nodes[i] = y;
    rule.weights[i] = 1.0 / christoffel;
  }
  return rule;
}

}  // namespace optstop
