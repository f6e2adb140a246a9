// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>

namespace optstop {

/// Unit-cost accounting for pricing runs.
///
/// The counting model (fixed so scaling fits are stable):
///  - sim_steps:   one unit per one-step transition of the full state vector
///                 (all components of one sample advanced by one date).
///  - basis_evals: one unit per evaluation of a single basis function at a
///                 single point; evaluating all K functions at a point adds K.
///  - flops:       multiply-accumulate units in regression linear algebra:
///                   * dense product of an a×b matrix with a b-vector: a*b
///                   * Gram-style product N^T N (a×b input):           a*b*b
///                   * Householder QR of an a×b matrix:                a*b*b
///                   * Cholesky factorization of a b×b matrix:         b*b*b/6
///                   * triangular solve against a b×b factor:          b*b
///                 Payoff evaluations, exp/log calls and RNG work are not
///                 counted.
struct CostCounters {
  std::uint64_t sim_steps = 0;
  std::uint64_t basis_evals = 0;
  std::uint64_t flops = 0;

  void add(const CostCounters& other) {
    sim_steps += other.sim_steps;
    basis_evals += other.basis_evals;
    flops += other.flops;
  }
};

}  // namespace optstop
