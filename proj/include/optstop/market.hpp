// SPDX-License-Identifier: MIT
#pragma once

#include <span>
#include <vector>

namespace optstop {

/// Multi-asset Black–Scholes market for a Bermudan max-call. All assets share
/// the same (rate, dividend, sigma, spot); exercise dates are the equispaced
/// grid t_j = j*maturity/exercise_steps, j = 0..exercise_steps.
struct MarketModel {
  int num_assets = 1;
  double rate = 0.0;        // per year
  double dividend = 0.0;    // per year
  double sigma = 0.0;       // per sqrt-year
  double spot = 0.0;        // initial price, identical across assets
  double maturity = 0.0;    // years
  int exercise_steps = 1;   // number of steps J; J+1 exercise dates
  double strike = 0.0;

  void validate() const;  // throws std::invalid_argument on bad parameters

  double dt() const { return maturity / exercise_steps; }
  double exercise_time(int j) const { return dt() * j; }
  /// e^{-rate * t_j}
  double discount(int j) const;
};

struct AssetState {
  std::vector<double> values;  // strictly positive prices
  int time_index = 0;          // j in 0..exercise_steps
};

/// Max-call payoff (max_i values_i - strike)^+.
double payoff(std::span<const double> values, double strike);
double payoff(const AssetState& state, const MarketModel& model);

/// Discounted payoff e^{-rate*t_j} * payoff at the state's date.
double discounted_payoff(const AssetState& state, const MarketModel& model);

/// Exact one-step GBM transition applied componentwise:
///   x -> x * exp((rate - dividend - sigma^2/2)*dt + sigma*sqrt(dt)*z).
/// normals must hold one standard normal draw per asset.
AssetState step(const AssetState& state, const MarketModel& model, double dt,
                std::span<const double> normals);

/// Precomputed transition constants for hot loops.
struct GbmStep {
  double drift;  // (rate - dividend - sigma^2/2)*dt
  double vol;    // sigma*sqrt(dt)

  GbmStep(const MarketModel& model, double dt);
  void apply(const double* x, const double* z, double* out, int n) const;
};

}  // namespace optstop
