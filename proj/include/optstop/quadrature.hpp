// SPDX-License-Identifier: MIT
#pragma once

#include <functional>
#include <vector>

namespace optstop {

/// Gauss–Hermite rule for the standard normal weight exp(-y^2/2)/sqrt(2*pi):
/// sum_i weights[i] * f(nodes[i]) integrates polynomials up to degree
/// 2*size-1 exactly.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  double integrate(const std::function<double(double)>& f) const;
};

/// Nodes and weights via Golub–Welsch on the probabilists' Hermite
/// three-term recurrence.
GaussHermiteRule gauss_hermite(int points);

}  // namespace optstop
