// SPDX-License-Identifier: MIT
#include "optstop/oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "optstop/regression.hpp"
#include "optstop/rng.hpp"
#include "optstop/sampling.hpp"
#include "support.hpp"

namespace optstop {
namespace {

MarketModel single_asset(double spot = 100.0, double strike = 100.0, int steps = 9) {
  MarketModel model;
  model.num_assets = 1;
  model.rate = 0.05;
  model.dividend = 0.1;
  model.sigma = 0.2;
  model.spot = spot;
  model.maturity = 3.0;
  model.exercise_steps = steps;
  model.strike = strike;
  return model;
}

TEST(ChainDpTest, SingleStateTakesTheBestDate) {
  const FiniteChain chain = load_chain(testing::fixture_path("single.chain"));
  const ChainDpResult result = chain_dp(chain);
  EXPECT_DOUBLE_EQ(result.values[0](0), 2.0);
  EXPECT_DOUBLE_EQ(result.continuations[0](0), 2.0);
  EXPECT_FALSE(result.stop_region[0][0]);  // waiting strictly dominates
}

TEST(ChainDpTest, ZeroPayoffsPriceZero) {
  FiniteChain chain = load_chain(testing::fixture_path("three_state.chain"));
  for (auto& z : chain.payoffs) z.setZero();
  const ChainDpResult result = chain_dp(chain);
  for (const auto& v : result.values) EXPECT_DOUBLE_EQ(v.maxCoeff(), 0.0);
}

TEST(ChainDpTest, TwoStateHandComputedValue) {
  const FiniteChain chain = load_chain(testing::fixture_path("two_state.chain"));
  const ChainDpResult result = chain_dp(chain);
  // From state 1: continuation 0.5*4 = 2 beats immediate 0.
  EXPECT_DOUBLE_EQ(result.values[0](0), 2.0);
  EXPECT_DOUBLE_EQ(result.values[0](1), 2.0);
}

TEST(ChainDpTest, BellmanEqualityHoldsExactly) {
  const FiniteChain chain = load_chain(testing::fixture_path("five_state.chain"));
  const ChainDpResult result = chain_dp(chain);
  for (int j = 0; j < chain.num_dates; ++j) {
    const Eigen::VectorXd expected =
        chain.payoffs[j].cwiseMax(chain.transition(j + 1) * result.values[j + 1]);
    EXPECT_DOUBLE_EQ((result.values[j] - expected).cwiseAbs().maxCoeff(), 0.0) << "date " << j;
  }
}

TEST(ChainDpTest, ValidationRejectsBadChains) {
  FiniteChain chain = load_chain(testing::fixture_path("two_state.chain"));
  chain.transitions[0](0, 0) = 0.6;  // row no longer stochastic
  EXPECT_THROW(chain.validate(), std::invalid_argument);
  chain = load_chain(testing::fixture_path("two_state.chain"));
  chain.payoffs[1](0) = -1.0;
  EXPECT_THROW(chain.validate(), std::invalid_argument);
}

TEST(TreePriceTest, VanishingStrikeApproachesSpot) {
  MarketModel model = single_asset(100.0, 1e-6, 3);
  model.dividend = 0.0;  // no early-exercise benefit, value -> spot
  const TreeSpec spec{model, 200};
  EXPECT_NEAR(tree_price(spec), model.spot, 0.01);
}

TEST(TreePriceTest, EuropeanLimitMatchesMonteCarlo) {
  MarketModel model = single_asset(100.0, 100.0, 1);
  const TreeSpec spec{model, 400};
  const double tree = tree_price(spec, {1});  // terminal exercise only

  const std::size_t count = 1000000;
  const TrajectoryBatch batch =
      simulate_paths(model, PathOrigin::fixed_x0, std::nullopt, count, {2718, 0}, 2);
  std::vector<double> payoffs(count);
  const double disc = model.discount(1);
  for (std::size_t m = 0; m < count; ++m)
    payoffs[m] = disc * std::max(batch.state(m, 1)[0] - model.strike, 0.0);
  const double mc = testing::mean(payoffs);
  const double se = testing::standard_error(payoffs);
  EXPECT_NEAR(tree, mc, 3.0 * se);
}

TEST(TreePriceTest, SelfConvergence) {
  const MarketModel model = single_asset();
  const double coarse = tree_price(TreeSpec{model, 200});
  const double fine = tree_price(TreeSpec{model, 400});
  EXPECT_LT(std::fabs(fine - coarse), 0.01);
}

TEST(TreePriceTest, MonotoneInVolatilityAndSpot) {
  double prev_price = 0.0;
  for (double sigma : {0.1, 0.15, 0.2, 0.25, 0.3}) {
    MarketModel model = single_asset();
    model.sigma = sigma;
    const double price = tree_price(TreeSpec{model, 150});
    EXPECT_GT(price, prev_price) << "sigma " << sigma;
    prev_price = price;
  }
  prev_price = 0.0;
  for (double spot : {80.0, 90.0, 100.0, 110.0, 120.0}) {
    const double price = tree_price(TreeSpec{single_asset(spot), 150});
    EXPECT_GT(price, prev_price) << "spot " << spot;
    prev_price = price;
  }
}

TEST(TreePriceTest, RejectsMultiAsset) {
  MarketModel model = single_asset();
  model.num_assets = 2;
  EXPECT_THROW(tree_price(TreeSpec{model, 100}), std::invalid_argument);
}

TEST(ChainEmbedTest, SingleStateWithinFourStandardErrors) {
  const FiniteChain chain = load_chain(testing::fixture_path("single.chain"));
  ChainEmbedConfig config;
  config.samples = 10000;
  config.seed = 12;
  const ChainEmbedReport report = embed_chain_pricing(chain, config);
  EXPECT_LE(report.max_value0_error, 4.0 * std::max(report.dates[0].l2_se, 1e-15));
}

TEST(ChainEmbedTest, DeterministicChainIsExact) {
  const FiniteChain chain = load_chain(testing::fixture_path("deterministic.chain"));
  for (const auto variant : {PseudoVariant::tv, PseudoVariant::ls}) {
    ChainEmbedConfig config;
    config.variant = variant;
    config.samples = 99999;  // rounded down to a multiple of 3 internally
    config.seed = 5;
    const ChainEmbedReport report = embed_chain_pricing(chain, config);
    EXPECT_EQ(report.samples_used % 3, 0u);
    for (const auto& date : report.dates) EXPECT_LT(date.l2_error, 1e-12);
    EXPECT_LT(report.max_value0_error, 1e-12);
  }
}

TEST(ChainEmbedTest, RandomChainWithinFourStandardErrors) {
  const FiniteChain chain = load_chain(testing::fixture_path("three_state.chain"));
  for (const auto variant : {PseudoVariant::tv, PseudoVariant::ls}) {
    ChainEmbedConfig config;
    config.variant = variant;
    config.samples = 100000;
    config.seed = 31;
    const ChainEmbedReport report = embed_chain_pricing(chain, config);
    for (std::size_t j = 0; j < report.dates.size(); ++j)
      EXPECT_LE(report.dates[j].l2_error, 4.0 * report.dates[j].l2_se)
          << "variant " << (variant == PseudoVariant::tv ? "tv" : "ls") << " date " << j;
  }
}

// Deviation shrinks like 1/sqrt(M): quadrupling M halves the error on
// average over 100 seeds.
TEST(ChainEmbedTest, ErrorHalvesWhenSamplesQuadruple) {
  const FiniteChain chain = load_chain(testing::fixture_path("three_state.chain"));
  double sum_small = 0.0, sum_large = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    ChainEmbedConfig config;
    config.samples = 9000;
    config.seed = derive_seed(900, seed);
    const ChainEmbedReport small = embed_chain_pricing(chain, config);
    config.samples = 36000;
    const ChainEmbedReport large = embed_chain_pricing(chain, config);
    sum_small += small.dates[0].l2_error;
    sum_large += large.dates[0].l2_error;
  }
  const double ratio = sum_small / sum_large;
  EXPECT_GT(ratio, 1.5);
  EXPECT_LT(ratio, 2.7);
}

// A constant payoff is represented exactly by the indicator basis, so the
// fits hit it to rounding noise at any sample count.
TEST(ChainEmbedTest, ConstantPayoffIsExact) {
  FiniteChain chain;
  chain.num_states = 2;
  chain.num_dates = 2;
  chain.payoffs.assign(3, Eigen::VectorXd::Constant(2, 5.0));
  Eigen::MatrixXd p(2, 2);
  p << 0.3, 0.7, 0.6, 0.4;
  chain.transitions.push_back(p);
  for (const auto variant : {PseudoVariant::tv, PseudoVariant::ls}) {
    ChainEmbedConfig config;
    config.variant = variant;
    config.samples = 10000;
    config.seed = 17;
    const ChainEmbedReport report = embed_chain_pricing(chain, config);
    for (const auto& date : report.dates) EXPECT_LT(date.l2_error, 1e-12);
    EXPECT_LT(report.max_value0_error, 1e-12);
  }
}

// Mean value error vs sample count follows the Monte Carlo rate.
TEST(ChainEmbedTest, ValueErrorSlopeIsMinusHalf) {
  const FiniteChain chain = load_chain(testing::fixture_path("three_state.chain"));
  const std::vector<std::size_t> m_grid{4000, 16000, 64000};
  std::vector<double> mean_error;
  for (std::size_t samples : m_grid) {
    double acc = 0.0;
    for (int seed = 0; seed < 40; ++seed) {
      ChainEmbedConfig config;
      config.samples = samples;
      config.seed = derive_seed(31337, seed);
      config.se_groups = 2;  // error bars unused here
      acc += embed_chain_pricing(chain, config).max_value0_error;
    }
    mean_error.push_back(acc / 40);
  }
  std::vector<double> m_values(m_grid.begin(), m_grid.end());
  const double slope = loglog_slope(m_values, mean_error);
  EXPECT_GT(slope, -0.65);
  EXPECT_LT(slope, -0.35);
}

TEST(ChainEmbedTest, ReuseRequiresHomogeneousChain) {
  FiniteChain chain = load_chain(testing::fixture_path("three_state.chain"));
  chain.transitions.push_back(chain.transitions[0]);
  chain.transitions.push_back(chain.transitions[0]);  // per-step kernels
  chain.validate();
  ChainEmbedConfig config;
  config.samples = 300;
  config.seed = 1;
  EXPECT_THROW(embed_chain_pricing(chain, config), std::invalid_argument);
  config.reuse_samples = false;
  EXPECT_NO_THROW(embed_chain_pricing(chain, config));
}

}  // namespace
}  // namespace optstop
