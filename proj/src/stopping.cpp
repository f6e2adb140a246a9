// SPDX-License-Identifier: MIT
#include "optstop/stopping.hpp"

#include <cmath>
#include <stdexcept>

#include "optstop/detail/induction.hpp"
#include "optstop/parallel.hpp"
#include "optstop/rng.hpp"

namespace optstop {

double StoppingPolicy::continuation(int j, const double* x, BasisWorkspace& ws) const {
  if (j < 0 || j > dates()) throw std::out_of_range("StoppingPolicy: date out of range");
  if (j == dates()) return 0.0;
  ws.values.resize(basis.size());
  basis.eval_all(x, ws.values.data(), ws);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < coefs[j].size(); ++i) acc += coefs[j](i) * ws.values[i];
  if (clip) acc = truncate_value(acc, clip_bound, true);
  return acc;
}

double StoppingPolicy::continuation(int j, const double* x) const {
  BasisWorkspace ws;
  return continuation(j, x, ws);
}

double StoppingPolicy::value(int j, const double* x, const MarketModel& model) const {
  const double exercise =
      model.discount(j) * payoff(std::span<const double>(x, model.num_assets), model.strike);
  return std::max(exercise, continuation(j, x));
}

namespace {

void check_standard_inputs(const TrajectoryBatch& batch, const BasisSystem& basis,
                           const MarketModel& model) {
  model.validate();
  if (batch.origin != PathOrigin::fixed_x0)
    throw std::invalid_argument("standard regression expects trajectories from x0");
  if (batch.dim != model.num_assets || batch.steps != model.exercise_steps)
    throw std::invalid_argument("standard regression: batch/model shape mismatch");
  if (batch.num_paths < basis.size())
    throw std::invalid_argument("standard regression: need at least K trajectories");
}

// Design matrix of basis values along one date of the batch.
void build_design(const TrajectoryBatch& batch, const BasisSystem& basis, int date,
                  Eigen::MatrixXd& design, int threads, CostCounters* counters) {
  const std::size_t count = batch.num_paths;
  const std::size_t k = basis.size();
  design.resize(count, k);
  parallel_blocks(count, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    BasisWorkspace ws;
    std::vector<double> row(k);
    for (std::size_t m = begin; m < end; ++m) {
      basis.eval_all(batch.state(m, date), row.data(), ws);
      for (std::size_t c = 0; c < k; ++c) design(m, c) = row[c];
    }
  });
  if (counters) counters->basis_evals += count * static_cast<std::uint64_t>(k);
}

}  // namespace

StoppingPolicy tv_standard(const TrajectoryBatch& batch, const BasisSystem& basis,
                           const MarketModel& model, CostCounters* counters, int threads) {
  check_standard_inputs(batch, basis, model);
  const std::size_t count = batch.num_paths;
  const int num_dates = batch.steps;
  const std::size_t k = basis.size();

  StoppingPolicy policy;
  policy.basis = basis;
  policy.method = FitMethod::standard_lsq;
  policy.coefs.resize(num_dates);

  Eigen::VectorXd responses(count);
  for (std::size_t m = 0; m < count; ++m)
    responses(m) = model.discount(num_dates) *
                   payoff(std::span<const double>(batch.state(m, num_dates), batch.dim),
                          model.strike);

  Eigen::MatrixXd design;
  for (int j = num_dates; j >= 1; --j) {
    build_design(batch, basis, j - 1, design, threads, counters);
    RegressionFit fit = fit_standard(design, responses, counters);
    policy.rank_deficient |= fit.rank_deficient;
    policy.coefs[j - 1] = fit.beta;
    if (j > 1) {
      Eigen::VectorXd fitted = design * policy.coefs[j - 1];
      if (counters) counters->flops += count * static_cast<std::uint64_t>(k);
      const double disc = model.discount(j - 1);
      for (std::size_t m = 0; m < count; ++m) {
        const double exercise =
            disc * payoff(std::span<const double>(batch.state(m, j - 1), batch.dim),
                          model.strike);
        responses(m) = std::max(exercise, fitted(m));
      }
    }
  }
  return policy;
}

StoppingPolicy ls_standard(const TrajectoryBatch& batch, const BasisSystem& basis,
                           const MarketModel& model, CostCounters* counters, int threads) {
  check_standard_inputs(batch, basis, model);
  const std::size_t count = batch.num_paths;
  const int num_dates = batch.steps;
  const std::size_t k = basis.size();

  StoppingPolicy policy;
  policy.basis = basis;
  policy.method = FitMethod::standard_lsq;
  policy.coefs.resize(num_dates);

  // Realized cash-flow at the current per-path stopping time, initially tau = J.
  Eigen::VectorXd cash(count);
  for (std::size_t m = 0; m < count; ++m)
    cash(m) = model.discount(num_dates) *
              payoff(std::span<const double>(batch.state(m, num_dates), batch.dim), model.strike);

  Eigen::MatrixXd design;
  for (int j = num_dates; j >= 1; --j) {
    build_design(batch, basis, j - 1, design, threads, counters);
    RegressionFit fit = fit_standard(design, cash, counters);
    policy.rank_deficient |= fit.rank_deficient;
    policy.coefs[j - 1] = fit.beta;
    Eigen::VectorXd fitted = design * policy.coefs[j - 1];
    if (counters) counters->flops += count * static_cast<std::uint64_t>(k);
    const double disc = model.discount(j - 1);
    for (std::size_t m = 0; m < count; ++m) {
      const double exercise = disc * payoff(
          std::span<const double>(batch.state(m, j - 1), batch.dim), model.strike);
      if (exercise > fitted(m)) cash(m) = exercise;  // strict: tau moves to j-1
    }
  }
  return policy;
}

namespace {

/// GBM adapter for the pseudo-regression cores.
struct GbmProblem {
  const MarketModel* model;
  MuParams mu;
  const BasisSystem* basis;
  const GramMatrix* gram_matrix;
  RngStream mu_rng;
  RngStream step_rng;
  GbmStep transition_step;
  std::vector<double> discounts;

  struct Scratch {
    BasisWorkspace ws;
    std::vector<double> z;
  };

  GbmProblem(const MarketModel& m, const MuParams& mu_params, const BasisSystem& b,
             const GramMatrix& g, const RngStream& rng)
      : model(&m),
        mu(mu_params),
        basis(&b),
        gram_matrix(&g),
        mu_rng(rng),
        step_rng(rng.sub(1)),
        transition_step(m, m.dt()) {
    discounts.resize(m.exercise_steps + 1);
    for (int j = 0; j <= m.exercise_steps; ++j) discounts[j] = m.discount(j);
  }

  int dates() const { return model->exercise_steps; }
  int dim() const { return model->num_assets; }
  std::size_t basis_size() const { return basis->size(); }
  const GramMatrix& gram() const { return *gram_matrix; }

  void draw_mu(std::size_t m, double* out, Scratch&) const {
    const int n = model->num_assets;
    fill_normals(mu_rng, m * static_cast<std::uint64_t>(n), std::span<double>(out, n));
    for (int c = 0; c < n; ++c) out[c] = std::exp(mu.log_mean + mu.log_sd * out[c]);
  }

  void transition(const double* x, int /*to_date*/, std::uint64_t slot, double* out,
                  Scratch& scratch) const {
    const int n = model->num_assets;
    scratch.z.resize(n);
    fill_normals(step_rng, slot * static_cast<std::uint64_t>(n), std::span<double>(scratch.z));
    transition_step.apply(x, scratch.z.data(), out, n);
  }

  double payoff(int j, const double* x) const {
    return discounts[j] *
           optstop::payoff(std::span<const double>(x, model->num_assets), model->strike);
  }

  void basis_values(const double* x, double* out, Scratch& scratch) const {
    basis->eval_all(x, out, scratch.ws);
  }
};

StoppingPolicy wrap_policy(std::vector<Eigen::VectorXd> coefs, const BasisSystem& basis,
                           const PseudoOptions& options) {
  StoppingPolicy policy;
  policy.basis = basis;
  policy.coefs = std::move(coefs);
  policy.method = FitMethod::pseudo;
  policy.clip = options.clip;
  policy.clip_bound = options.clip_bound;
  return policy;
}

void check_pseudo_inputs(const MarketModel& model, const MuParams& mu, const BasisSystem& basis,
                         const GramMatrix& gram) {
  model.validate();
  mu.validate();
  if (mu.dim != model.num_assets)
    throw std::invalid_argument("pseudo regression: mu dimension must match num_assets");
  if (gram.size() != static_cast<Eigen::Index>(basis.size()))
    throw std::invalid_argument("pseudo regression: Gram size must match basis size");
}

detail::InductionOptions to_core_options(const PseudoOptions& options) {
  detail::InductionOptions core;
  core.reuse_samples = options.reuse_samples;
  core.threads = options.threads;
  core.clip = options.clip;
  core.clip_bound = options.clip_bound;
  return core;
}

}  // namespace

StoppingPolicy tv_pseudo(const MarketModel& model, const MuParams& mu, const BasisSystem& basis,
                         const GramMatrix& gram, std::size_t count, const RngStream& rng,
                         const PseudoOptions& options, CostCounters* counters) {
  check_pseudo_inputs(model, mu, basis, gram);
  GbmProblem problem(model, mu, basis, gram, rng);
  auto coefs = detail::tv_pseudo_core(problem, count, to_core_options(options), counters);
  return wrap_policy(std::move(coefs), basis, options);
}

StoppingPolicy ls_pseudo(const MarketModel& model, const MuParams& mu, const BasisSystem& basis,
                         const GramMatrix& gram, std::size_t count, const RngStream& rng,
                         const PseudoOptions& options, CostCounters* counters) {
  check_pseudo_inputs(model, mu, basis, gram);
  GbmProblem problem(model, mu, basis, gram, rng);
  auto coefs = detail::ls_pseudo_core(problem, count, to_core_options(options), counters);
  return wrap_policy(std::move(coefs), basis, options);
}

double price_at_origin(const StoppingPolicy& policy, const MarketModel& model) {
  std::vector<double> x0(model.num_assets, model.spot);
  const double exercise = payoff(std::span<const double>(x0), model.strike);  // t_0 = 0
  return std::max(exercise, policy.continuation(0, x0.data()));
}

PriceEstimate evaluate_policy(const StoppingPolicy& policy, const MarketModel& model,
                              std::size_t eval_count, const RngStream& rng, int threads,
                              CostCounters* counters, std::vector<double>* payoffs_out) {
  model.validate();
  if (eval_count == 0) throw std::invalid_argument("evaluate_policy: eval_count must be >= 1");
  if (policy.dates() != model.exercise_steps)
    throw std::invalid_argument("evaluate_policy: policy/model date mismatch");

  const int num_dates = model.exercise_steps;
  const int n = model.num_assets;
  const std::size_t k = policy.basis.size();
  const GbmStep transition_step(model, model.dt());
  if (payoffs_out) payoffs_out->assign(eval_count, 0.0);

  const std::size_t blocks = num_blocks(eval_count);
  std::vector<double> block_sum(blocks, 0.0), block_sumsq(blocks, 0.0);
  std::vector<std::uint64_t> block_steps(blocks, 0), block_cont(blocks, 0);

  parallel_blocks(eval_count, threads, [&](std::size_t b, std::size_t begin, std::size_t end) {
    BasisWorkspace ws;
    std::vector<double> x(n), z(n);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t m = begin; m < end; ++m) {
      x.assign(n, model.spot);
      double stopped = 0.0;
      for (int j = 0; j <= num_dates; ++j) {
        const double exercise =
            model.discount(j) * payoff(std::span<const double>(x), model.strike);
        if (j == num_dates) {  // c_J = 0: any positive payoff is taken, else worthless
          stopped = exercise;
          break;
        }
        const double cont = policy.continuation(j, x.data(), ws);
        ++block_cont[b];
        if (exercise > cont) {  // strict inequality at evaluation time
          stopped = exercise;
          break;
        }
        const std::uint64_t base =
            (m * static_cast<std::uint64_t>(num_dates) + j) * static_cast<std::uint64_t>(n);
        fill_normals(rng, base, std::span<double>(z));
        transition_step.apply(x.data(), z.data(), x.data(), n);
        ++block_steps[b];
      }
      sum += stopped;
      sumsq += stopped * stopped;
      if (payoffs_out) (*payoffs_out)[m] = stopped;
    }
    block_sum[b] = sum;
    block_sumsq[b] = sumsq;
  });

  double sum = 0.0, sumsq = 0.0;
  std::uint64_t steps = 0, cont_evals = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    sum += block_sum[b];
    sumsq += block_sumsq[b];
    steps += block_steps[b];
    cont_evals += block_cont[b];
  }
  if (counters) {
    counters->sim_steps += steps;
    counters->basis_evals += cont_evals * k;
    counters->flops += cont_evals * k;
  }

  const double mean = sum / static_cast<double>(eval_count);
  double variance = 0.0;
  if (eval_count > 1)
    variance = std::max(0.0, (sumsq - eval_count * mean * mean) /
                                 static_cast<double>(eval_count - 1));
  PriceEstimate estimate;
  estimate.value = mean;
  estimate.std_error = std::sqrt(variance / static_cast<double>(eval_count));
  estimate.method = policy.method;
  estimate.eval_count = eval_count;
  return estimate;
}

}  // namespace optstop
