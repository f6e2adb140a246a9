// SPDX-License-Identifier: MIT
#include "optstop/market.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "optstop/rng.hpp"
#include "support.hpp"

namespace optstop {
namespace {

MarketModel benchmark_model(int assets) {
  MarketModel model;
  model.num_assets = assets;
  model.rate = 0.05;
  model.dividend = 0.1;
  model.sigma = 0.2;
  model.spot = 100.0;
  model.maturity = 3.0;
  model.exercise_steps = 9;
  model.strike = 100.0;
  return model;
}

TEST(PayoffTest, MaxCallExamples) {
  const std::vector<double> in_the_money{90.0, 110.0};
  EXPECT_DOUBLE_EQ(payoff(in_the_money, 100.0), 10.0);
  const std::vector<double> out_of_the_money{80.0, 95.0};
  EXPECT_DOUBLE_EQ(payoff(out_of_the_money, 100.0), 0.0);
  const std::vector<double> at_the_money{100.0};
  EXPECT_DOUBLE_EQ(payoff(at_the_money, 100.0), 0.0);
}

TEST(PayoffTest, MonotoneAndLipschitzInMaxNorm) {
  const RngStream rng{11, 0};
  std::uint64_t idx = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(3), y(3);
    double max_gap = 0.0;
    for (int i = 0; i < 3; ++i) {
      x[i] = 80.0 + 40.0 * uniform_at(rng, idx++);
      y[i] = x[i] + 10.0 * uniform_at(rng, idx++);  // componentwise >=
      max_gap = std::max(max_gap, y[i] - x[i]);
    }
    const double px = payoff(x, 100.0);
    const double py = payoff(y, 100.0);
    EXPECT_GE(py, px);
    EXPECT_LE(py - px, max_gap + 1e-12);
  }
}

TEST(DiscountedPayoffTest, DiscountFactors) {
  MarketModel model = benchmark_model(2);
  AssetState state{{90.0, 110.0}, 0};
  EXPECT_DOUBLE_EQ(discounted_payoff(state, model), 10.0);  // t_0 = 0

  MarketModel zero_rate = model;
  zero_rate.rate = 0.0;
  for (int j : {0, 3, 9}) {
    state.time_index = j;
    EXPECT_DOUBLE_EQ(discounted_payoff(state, zero_rate), 10.0);
  }

  MarketModel one_step = benchmark_model(2);
  one_step.exercise_steps = 1;  // t_1 = 3
  state.time_index = 1;
  EXPECT_NEAR(discounted_payoff(state, one_step), 10.0 * std::exp(-0.15), 1e-14);
}

TEST(StepTest, DriftOnlyClosedForm) {
  MarketModel model = benchmark_model(2);
  AssetState state{{100.0, 100.0}, 0};
  const std::vector<double> zeros{0.0, 0.0};
  const AssetState next = step(state, model, 1.0, zeros);
  EXPECT_EQ(next.time_index, 1);
  for (double v : next.values) EXPECT_NEAR(v, 100.0 * std::exp(-0.07), 1e-12);
}

TEST(StepTest, RejectsBadInput) {
  MarketModel model = benchmark_model(1);
  AssetState state{{100.0}, 0};
  const std::vector<double> z{0.0};
  EXPECT_THROW(step(state, model, 0.0, z), std::invalid_argument);
  EXPECT_THROW(step(state, model, -1.0, z), std::invalid_argument);
  const std::vector<double> wrong_size{0.0, 0.0};
  EXPECT_THROW(step(state, model, 1.0, wrong_size), std::invalid_argument);
}

TEST(StepTest, ComponentExchangeability) {
  MarketModel model = benchmark_model(2);
  AssetState state{{95.0, 105.0}, 0};
  const std::vector<double> z{0.7, -1.3};
  const std::vector<double> swapped{-1.3, 0.7};
  const AssetState a = step(state, model, 0.5, z);
  AssetState state_swapped{{105.0, 95.0}, 0};
  const AssetState b = step(state_swapped, model, 0.5, swapped);
  EXPECT_DOUBLE_EQ(a.values[0], b.values[1]);
  EXPECT_DOUBLE_EQ(a.values[1], b.values[0]);
}

TEST(StepTest, PositivityPreserved) {
  MarketModel model = benchmark_model(1);
  const RngStream rng{5, 1};
  AssetState state{{1e-6}, 0};
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const std::vector<double> z{normal_at(rng, i)};
    state = step(state, model, model.dt(), z);
    state.time_index = 0;
    ASSERT_GT(state.values[0], 0.0);
  }
}

// Discounted-plus-dividend martingale property of the exact transition,
// Monte Carlo at 1e6 draws within 4 standard errors.
TEST(StepTest, MartingaleUnderDividendAdjustedDiscount) {
  MarketModel model = benchmark_model(1);
  const RngStream rng{123, 2};
  const std::size_t count = 1000000;
  const double dt = 1.0;
  const double adjust = std::exp(-(model.rate - model.dividend) * dt);
  std::vector<double> z(count);
  fill_normals(rng, 0, z);
  double sum = 0.0, sumsq = 0.0;
  const GbmStep tr(model, dt);
  for (std::size_t i = 0; i < count; ++i) {
    double out;
    const double x = 100.0;
    tr.apply(&x, &z[i], &out, 1);
    const double v = adjust * out;
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / count;
  const double se = std::sqrt((sumsq / count - mean * mean) / count);
  EXPECT_NEAR(mean, 100.0, 4.0 * se);
}

TEST(MarketModelTest, ValidationErrors) {
  MarketModel model = benchmark_model(2);
  model.sigma = 0.0;
  EXPECT_THROW(model.validate(), std::invalid_argument);
  model = benchmark_model(2);
  model.spot = -1.0;
  EXPECT_THROW(model.validate(), std::invalid_argument);
  model = benchmark_model(2);
  model.exercise_steps = 0;
  EXPECT_THROW(model.validate(), std::invalid_argument);
  model = benchmark_model(2);
  EXPECT_NO_THROW(model.validate());
  EXPECT_DOUBLE_EQ(model.exercise_time(3), 1.0);
}

}  // namespace
}  // namespace optstop
