// SPDX-License-Identifier: MIT
#include "optstop/market.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optstop {

void MarketModel::validate() const {
  if (num_assets < 1) throw std::invalid_argument("MarketModel: num_assets must be >= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("MarketModel: sigma must be > 0");
  if (!(maturity > 0.0)) throw std::invalid_argument("MarketModel: maturity must be > 0");
  if (!(spot > 0.0)) throw std::invalid_argument("MarketModel: spot must be > 0");
  if (!(strike > 0.0)) throw std::invalid_argument("MarketModel: strike must be > 0");
  if (exercise_steps < 1) throw std::invalid_argument("MarketModel: exercise_steps must be >= 1");
}

double MarketModel::discount(int j) const { return std::exp(-rate * exercise_time(j)); }

double payoff(std::span<const double> values, double strike) {
  double best = 0.0;
  for (double v : values) best = std::max(best, v);
  return std::max(best - strike, 0.0);
}

double payoff(const AssetState& state, const MarketModel& model) {
  return payoff(std::span<const double>(state.values), model.strike);
}

double discounted_payoff(const AssetState& state, const MarketModel& model) {
  return model.discount(state.time_index) * payoff(state, model);
}

GbmStep::GbmStep(const MarketModel& model, double dt)
    : drift((model.rate - model.dividend - 0.5 * model.sigma * model.sigma) * dt),
      vol(model.sigma * std::sqrt(dt)) {}

void GbmStep::apply(const double* x, const double* z, double* out, int n) const {
  for (int i = 0; i < n; ++i) out[i] = x[i] * std::exp(drift + vol * z[i]);
}

AssetState step(const AssetState& state, const MarketModel& model, double dt,
                std::span<const double> normals) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
  if (normals.size() != state.values.size())
    throw std::invalid_argument("step: need one normal draw per asset");
  AssetState next;
  next.values.resize(state.values.size());
  next.time_index = state.time_index + 1;
  const GbmStep tr(model, dt);
  tr.apply(state.values.data(), normals.data(), next.values.data(),
           static_cast<int>(state.values.size()));
  return next;
}

}  // namespace optstop
