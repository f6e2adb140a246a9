// SPDX-License-Identifier: MIT
#include "optstop/stopping.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "optstop/oracle.hpp"
#include "optstop/rng.hpp"
#include "support.hpp"

namespace optstop {
namespace {

MarketModel benchmark_model(int assets, int steps = 9, double spot = 100.0) {
  MarketModel model;
  model.num_assets = assets;
  model.rate = 0.05;
  model.dividend = 0.1;
  model.sigma = 0.2;
  model.spot = spot;
  model.maturity = 3.0;
  model.exercise_steps = steps;
  model.strike = 100.0;
  return model;
}

MuParams table_mu(const MarketModel& model, double sigma_hat = 0.26) {
  return lognormal_mu(model, model.maturity / 2.0, sigma_hat);
}

BasisSystem table_basis(const MarketModel& model, int degree = 5, double sigma_hat = 0.26) {
  return hermite_basis(model.num_assets, degree, table_mu(model, sigma_hat));
}

StoppingPolicy never_exercise_stub(const BasisSystem& basis, int dates) {
  // A huge constant coefficient makes every continuation value beat any
  // payoff, so the induced rule holds to the terminal date.
  StoppingPolicy policy;
  policy.basis = basis;
  policy.coefs.assign(dates, Eigen::VectorXd::Zero(basis.size()));
  for (auto& beta : policy.coefs) beta(0) = 1e18;
  return policy;
}

StoppingPolicy zero_continuation_policy(const BasisSystem& basis, int dates) {
  StoppingPolicy policy;
  policy.basis = basis;
  policy.coefs.assign(dates, Eigen::VectorXd::Zero(basis.size()));
  return policy;
}

// Black–Scholes call with continuous dividend yield (independent oracle for
// the European degenerate cases).
double bs_call(double spot, double strike, double rate, double dividend, double sigma,
               double maturity) {
  const double sq = sigma * std::sqrt(maturity);
  const double d1 =
      (std::log(spot / strike) + (rate - dividend + 0.5 * sigma * sigma) * maturity) / sq;
  const double d2 = d1 - sq;
  const auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  return spot * std::exp(-dividend * maturity) * phi(d1) -
         strike * std::exp(-rate * maturity) * phi(d2);
}

TEST(TvStandardTest, SingleStepConstantBasisIsSampleMean) {
  MarketModel model = benchmark_model(2, 1);
  const BasisSystem basis = hermite_basis(2, 0, table_mu(model));  // K = 1
  const std::size_t count = 5000;
  const TrajectoryBatch batch =
      simulate_paths(model, PathOrigin::fixed_x0, std::nullopt, count, {70, 0});
  const StoppingPolicy policy = tv_standard(batch, basis, model);
  std::vector<double> terminal(count);
  for (std::size_t m = 0; m < count; ++m)
    terminal[m] = model.discount(1) *
                  payoff(std::span<const double>(batch.state(m, 1), 2), model.strike);
  EXPECT_NEAR(policy.coefs[0](0), testing::mean(terminal), 1e-10);
}

TEST(TvStandardTest, ZeroPayoffGivesZeroPolicy) {
  MarketModel model = benchmark_model(2, 4);
  model.strike = 1e9;  // payoff identically zero on any simulated path
  const BasisSystem basis = table_basis(model, 3);
  const TrajectoryBatch batch =
      simulate_paths(model, PathOrigin::fixed_x0, std::nullopt, 2000, {71, 0});
  const StoppingPolicy policy = tv_standard(batch, basis, model);
  for (const auto& beta : policy.coefs) EXPECT_NEAR(beta.cwiseAbs().maxCoeff(), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(price_at_origin(policy, model), 0.0);
}

TEST(PseudoAlgorithmsTest, SingleStepConstantBasisIsMeanOfOneStepPayoffs) {
  MarketModel model = benchmark_model(2, 1);
  const MuParams mu = table_mu(model);
  const BasisSystem basis = hermite_basis(2, 0, mu);
  const GramMatrix gram = GramMatrix::identity(1);
  const RngStream rng{72, streams::kTraining};
  const std::size_t count = 4000;
  const StoppingPolicy policy = tv_pseudo(model, mu, basis, gram, count, rng);

  // Reconstruct the one-step samples from the documented stream layout:
  // mu draws on rng, one-step normals on rng+1 with slot m (reuse tag 0).
  const GbmStep tr(model, model.dt());
  std::vector<double> payoffs(count);
  for (std::size_t m = 0; m < count; ++m) {
    double u[2], z[2], x[2];
    fill_normals(rng, 2 * m, std::span<double>(u, 2));
    for (int c = 0; c < 2; ++c) u[c] = std::exp(mu.log_mean + mu.log_sd * u[c]);
    fill_normals(rng.sub(1), 2 * m, std::span<double>(z, 2));
    tr.apply(u, z, x, 2);
    payoffs[m] = model.discount(1) * payoff(std::span<const double>(x, 2), model.strike);
  }
  EXPECT_NEAR(policy.coefs[0](0), testing::mean(payoffs), 1e-10);
}

TEST(PseudoAlgorithmsTest, ZeroPayoffGivesZeroPolicy) {
  MarketModel model = benchmark_model(3, 5);
  model.strike = 1e9;
  const MuParams mu = table_mu(model, 0.29);
  const BasisSystem basis = hermite_basis(3, 2, mu);
  const GramMatrix gram = GramMatrix::identity(basis.size());
  for (bool ls : {false, true}) {
    const StoppingPolicy policy =
        ls ? ls_pseudo(model, mu, basis, gram, 3000, {73, streams::kTraining})
           : tv_pseudo(model, mu, basis, gram, 3000, {73, streams::kTraining});
    for (const auto& beta : policy.coefs) EXPECT_DOUBLE_EQ(beta.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(AlgorithmEquivalenceTest, SingleStepVariantsCoincide) {
  MarketModel model = benchmark_model(2, 1);
  const MuParams mu = table_mu(model);
  const BasisSystem basis = table_basis(model, 3);
  const GramMatrix gram = GramMatrix::identity(basis.size());

  // With shared trajectories the standard variants are identical at J = 1.
  const TrajectoryBatch batch =
      simulate_paths(model, PathOrigin::fixed_x0, std::nullopt, 5000, {74, 0});
  const StoppingPolicy tv_s = tv_standard(batch, basis, model);
  const StoppingPolicy ls_s = ls_standard(batch, basis, model);
  EXPECT_EQ(tv_s.coefs[0], ls_s.coefs[0]);  // bit-exact

  // The pseudo variants draw the same samples from the same stream layout.
  const RngStream rng{75, streams::kTraining};
  const StoppingPolicy tv_p = tv_pseudo(model, mu, basis, gram, 5000, rng);
  const StoppingPolicy ls_p = ls_pseudo(model, mu, basis, gram, 5000, rng);
  EXPECT_EQ(tv_p.coefs[0], ls_p.coefs[0]);  // bit-exact
}

TEST(AlgorithmDeterminismTest, BitReproducibleAcrossRunsAndThreads) {
  MarketModel model = benchmark_model(2, 4);
  const MuParams mu = table_mu(model);
  const BasisSystem basis = table_basis(model, 3);
  const GramMatrix gram = GramMatrix::identity(basis.size());
  const std::size_t count = 6000;

  for (bool ls : {false, true}) {
    PseudoOptions one;
    one.threads = 1;
    PseudoOptions four;
    four.threads = 4;
    const RngStream rng{76, streams::kTraining};
    const StoppingPolicy a = ls ? ls_pseudo(model, mu, basis, gram, count, rng, one)
                                : tv_pseudo(model, mu, basis, gram, count, rng, one);
    const StoppingPolicy b = ls ? ls_pseudo(model, mu, basis, gram, count, rng, four)
                                : tv_pseudo(model, mu, basis, gram, count, rng, four);
    for (int j = 0; j < a.dates(); ++j) EXPECT_EQ(a.coefs[j], b.coefs[j]);
  }

  const TrajectoryBatch batch_a =
      simulate_paths(model, PathOrigin::fixed_x0, std::nullopt, count, {77, 0}, 1);
  const TrajectoryBatch batch_b =
      simulate_paths(model, PathOrigin::fixed_x0, std::nullopt, count, {77, 0}, 4);
  const StoppingPolicy a = tv_standard(batch_a, basis, model, nullptr, 1);
  const StoppingPolicy b = tv_standard(batch_b, basis, model, nullptr, 4);
  for (int j = 0; j < a.dates(); ++j) EXPECT_EQ(a.coefs[j], b.coefs[j]);
}

TEST(PolicyInvariantsTest, TerminalContinuationIsZeroAndValueDominatesPayoff) {
  MarketModel model = benchmark_model(2, 5);
  const MuParams mu = table_mu(model);
  const BasisSystem basis = table_basis(model, 4);
  const GramMatrix gram = GramMatrix::identity(basis.size());
  const StoppingPolicy policy =
      tv_pseudo(model, mu, basis, gram, 20000, {78, streams::kTraining});

  const RngStream rng{79, 9};
  std::uint64_t idx = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double x[2] = {60.0 + 100.0 * uniform_at(rng, idx++),
                         60.0 + 100.0 * uniform_at(rng, idx++)};
    EXPECT_DOUBLE_EQ(policy.continuation(policy.dates(), x), 0.0);
    for (int j = 0; j <= policy.dates(); ++j) {
      const double exercise =
          model.discount(j) * payoff(std::span<const double>(x, 2), model.strike);
      EXPECT_GE(policy.value(j, x, model), exercise);
    }
  }
}

TEST(ReuseFlagTest, SharedAndFreshSamplesAgreeStatistically) {
  MarketModel model = benchmark_model(2, 5);
  const MuParams mu = table_mu(model);
  const BasisSystem basis = table_basis(model, 4);
  const GramMatrix gram = GramMatrix::identity(basis.size());
  const std::size_t count = 50000;

  PseudoOptions shared;
  PseudoOptions fresh;
  fresh.reuse_samples = false;
  const StoppingPolicy with_reuse =
      tv_pseudo(model, mu, basis, gram, count, {80, streams::kTraining}, shared);
  const StoppingPolicy without_reuse =
      tv_pseudo(model, mu, basis, gram, count, {81, streams::kTraining}, fresh);
  const PriceEstimate a =
      evaluate_policy(with_reuse, model, 100000, {90, streams::kEvaluation}, 2);
  const PriceEstimate b =
      evaluate_policy(without_reuse, model, 100000, {91, streams::kEvaluation}, 2);
  const double combined = std::hypot(a.std_error, b.std_error);
  EXPECT_NEAR(a.value, b.value, 3.0 * combined);
}

TEST(PriceAtOriginTest, ImmediateExerciseDominance) {
  MarketModel model = benchmark_model(2, 3, 150.0);  // deep in the money
  const BasisSystem basis = table_basis(model, 2);
  const StoppingPolicy zero = zero_continuation_policy(basis, 3);
  EXPECT_DOUBLE_EQ(price_at_origin(zero, model), 50.0);

  MarketModel worthless = benchmark_model(2, 3);
  worthless.strike = 1e9;
  const StoppingPolicy zero2 = zero_continuation_policy(table_basis(worthless, 2), 3);
  EXPECT_DOUBLE_EQ(price_at_origin(zero2, worthless), 0.0);
}

TEST(EvaluatePolicyTest, NeverExerciseStubMatchesEuropeanClosedForm) {
  MarketModel model = benchmark_model(1, 9);
  const BasisSystem basis = table_basis(model, 5);
  const StoppingPolicy stub = never_exercise_stub(basis, model.exercise_steps);
  const PriceEstimate estimate =
      evaluate_policy(stub, model, 400000, {92, streams::kEvaluation}, 2);
  const double european = bs_call(model.spot, model.strike, model.rate, model.dividend,
                                  model.sigma, model.maturity);
  EXPECT_NEAR(estimate.value, european, 4.0 * estimate.std_error);
}

TEST(EvaluatePolicyTest, ZeroPayoffGivesZeroEstimate) {
  MarketModel model = benchmark_model(2, 3);
  model.strike = 1e9;
  const BasisSystem basis = table_basis(model, 2);
  const StoppingPolicy zero = zero_continuation_policy(basis, 3);
  const PriceEstimate estimate = evaluate_policy(zero, model, 1000, {93, streams::kEvaluation});
  EXPECT_DOUBLE_EQ(estimate.value, 0.0);
  EXPECT_DOUBLE_EQ(estimate.std_error, 0.0);
}

TEST(EvaluatePolicyTest, CollectsPayoffsDeterministically) {
  MarketModel model = benchmark_model(2, 3);
  const MuParams mu = table_mu(model);
  const BasisSystem basis = table_basis(model, 3);
  const GramMatrix gram = GramMatrix::identity(basis.size());
  const StoppingPolicy policy =
      tv_pseudo(model, mu, basis, gram, 5000, {94, streams::kTraining});
  std::vector<double> payoffs_one, payoffs_four;
  const PriceEstimate a =
      evaluate_policy(policy, model, 20000, {95, streams::kEvaluation}, 1, nullptr, &payoffs_one);
  const PriceEstimate b =
      evaluate_policy(policy, model, 20000, {95, streams::kEvaluation}, 4, nullptr, &payoffs_four);
  EXPECT_EQ(payoffs_one, payoffs_four);
  EXPECT_DOUBLE_EQ(a.value, b.value);
  EXPECT_DOUBLE_EQ(a.std_error, b.std_error);
  EXPECT_NEAR(testing::mean(payoffs_one), a.value, 1e-12);
}

// Value iteration on standard regression against the dense tree.
TEST(TvStandardTest, SingleAssetAgreesWithTreeOracle) {
  MarketModel model = benchmark_model(1, 3);
  const BasisSystem basis = table_basis(model, 5);
  const double oracle = tree_price(TreeSpec{model, 400});
  const TrajectoryBatch batch =
      simulate_paths(model, PathOrigin::fixed_x0, std::nullopt, 500000, {4096, 0}, 2);
  const StoppingPolicy policy = tv_standard(batch, basis, model, nullptr, 2);
  const PriceEstimate price =
      evaluate_policy(policy, model, 500000, {4097, streams::kEvaluation}, 2);
  EXPECT_NEAR(price.value, oracle, 0.05);
}

// Lower-bound property against the tree oracle over 50 seeds.
TEST(EvaluatePolicyTest, LowerBoundNeverBeatsOracle) {
  MarketModel model = benchmark_model(1, 3);
  const MuParams mu = table_mu(model);
  const BasisSystem basis = table_basis(model, 5);
  const GramMatrix gram = GramMatrix::identity(basis.size());
  const double oracle = tree_price(TreeSpec{model, 400});
  for (int seed = 0; seed < 50; ++seed) {
    const StoppingPolicy policy = tv_pseudo(model, mu, basis, gram, 20000,
                                            {derive_seed(7000, seed), streams::kTraining});
    const PriceEstimate estimate = evaluate_policy(
        policy, model, 20000, {derive_seed(7001, seed), streams::kEvaluation}, 2);
    EXPECT_LE(estimate.value - 3.0 * estimate.std_error, oracle) << "seed " << seed;
  }
}

TEST(ClippingTest, ContinuationValuesStayInsideTheBand) {
  MarketModel model = benchmark_model(2, 4);
  const MuParams mu = table_mu(model);
  const BasisSystem basis = table_basis(model, 4);
  const GramMatrix gram = GramMatrix::identity(basis.size());
  PseudoOptions options;
  options.clip = true;
  options.clip_bound = 5.0;
  const StoppingPolicy policy =
      tv_pseudo(model, mu, basis, gram, 10000, {96, streams::kTraining}, options);
  EXPECT_TRUE(policy.clip);
  const RngStream rng{97, 3};
  for (int trial = 0; trial < 200; ++trial) {
    const double x[2] = {50.0 + 150.0 * uniform_at(rng, 2 * trial),
                         50.0 + 150.0 * uniform_at(rng, 2 * trial + 1)};
    for (int j = 0; j < policy.dates(); ++j) {
      const double c = policy.continuation(j, x);
      EXPECT_GE(c, 0.0);
      EXPECT_LE(c, 5.0);
    }
  }
}

TEST(StoppingPreconditionsTest, ShapeChecks) {
  MarketModel model = benchmark_model(2, 3);
  const MuParams mu = table_mu(model);
  const BasisSystem basis = table_basis(model, 2);
  const GramMatrix gram = GramMatrix::identity(basis.size());

  // Standard regression rejects mu-origin batches and undersized batches.
  const TrajectoryBatch mu_batch =
      simulate_paths(model, PathOrigin::sampled_from_mu, mu, 100, {98, 0});
  EXPECT_THROW(tv_standard(mu_batch, basis, model), std::invalid_argument);
  const TrajectoryBatch tiny =
      simulate_paths(model, PathOrigin::fixed_x0, std::nullopt, 3, {98, 0});
  EXPECT_THROW(ls_standard(tiny, basis, model), std::invalid_argument);

  EXPECT_THROW(tv_pseudo(model, mu, basis, gram, 0, {98, 0}), std::invalid_argument);
  const GramMatrix wrong = GramMatrix::identity(basis.size() + 1);
  EXPECT_THROW(tv_pseudo(model, mu, basis, wrong, 10, {98, 0}), std::invalid_argument);

  const StoppingPolicy policy = zero_continuation_policy(basis, 3);
  EXPECT_THROW(evaluate_policy(policy, model, 0, {98, 0}), std::invalid_argument);
}

}  // namespace
}  // namespace optstop
