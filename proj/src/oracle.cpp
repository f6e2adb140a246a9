// SPDX-License-Identifier: MIT
#include "optstop/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "optstop/basis.hpp"
#include "optstop/detail/induction.hpp"
#include "optstop/rng.hpp"

namespace optstop {

const Eigen::MatrixXd& FiniteChain::transition(int step) const {
  if (step < 1 || step > num_dates) throw std::out_of_range("FiniteChain: step out of range");
  return homogeneous() ? transitions[0] : transitions[step - 1];
}

void FiniteChain::validate() const {
  if (num_states < 1) throw std::invalid_argument("FiniteChain: need at least one state");
  if (num_dates < 1) throw std::invalid_argument("FiniteChain: need at least one step");
  if (static_cast<int>(payoffs.size()) != num_dates + 1)
    throw std::invalid_argument("FiniteChain: need a payoff vector per date");
  for (const auto& z : payoffs) {
    if (z.size() != num_states) throw std::invalid_argument("FiniteChain: payoff size mismatch");
    if ((z.array() < 0.0).any()) throw std::invalid_argument("FiniteChain: payoffs must be >= 0");
  }
  if (transitions.size() != 1 && static_cast<int>(transitions.size()) != num_dates)
    throw std::invalid_argument("FiniteChain: need 1 or num_dates transition matrices");
  for (const auto& p : transitions) {
    if (p.rows() != num_states || p.cols() != num_states)
      throw std::invalid_argument("FiniteChain: transition shape mismatch");
    if ((p.array() < 0.0).any())
      throw std::invalid_argument("FiniteChain: negative transition probability");
    for (int i = 0; i < num_states; ++i)
      if (std::fabs(p.row(i).sum() - 1.0) > 1e-12)
        throw std::invalid_argument("FiniteChain: transition rows must sum to 1");
  }
}

FiniteChain load_chain(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("load_chain: cannot open " + file.string());
  FiniteChain chain;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "states") {
      ls >> chain.num_states;
    } else if (key == "dates") {
      ls >> chain.num_dates;
    } else if (key == "payoff") {
      int j = 0;
      ls >> j;
      Eigen::VectorXd z(chain.num_states);
      for (int i = 0; i < chain.num_states; ++i) ls >> z(i);
      if (!ls) throw std::runtime_error("load_chain: short payoff line in " + file.string());
      if (static_cast<int>(chain.payoffs.size()) != j)
        throw std::runtime_error("load_chain: payoff dates out of order in " + file.string());
      chain.payoffs.push_back(z);
    } else if (key == "transition") {
      Eigen::MatrixXd p(chain.num_states, chain.num_states);
      for (int i = 0; i < chain.num_states; ++i) {
        if (!std::getline(is, line))
          throw std::runtime_error("load_chain: truncated transition in " + file.string());
        std::istringstream row(line);
        for (int c = 0; c < chain.num_states; ++c) row >> p(i, c);
        if (!row) throw std::runtime_error("load_chain: short transition row in " + file.string());
      }
      chain.transitions.push_back(p);
    } else {
      throw std::runtime_error("load_chain: unknown key '" + key + "' in " + file.string());
    }
  }
  chain.validate();
  return chain;
}

ChainDpResult chain_dp(const FiniteChain& chain) {
  chain.validate();
  const int num_dates = chain.num_dates;
  ChainDpResult result;
  result.values.resize(num_dates + 1);
  result.continuations.resize(num_dates + 1);
  result.stop_region.resize(num_dates + 1);

  result.continuations[num_dates] = Eigen::VectorXd::Zero(chain.num_states);
  result.values[num_dates] = chain.payoffs[num_dates];
  result.stop_region[num_dates].assign(chain.num_states, true);

  for (int j = num_dates - 1; j >= 0; --j) {
    result.continuations[j] = chain.transition(j + 1) * result.values[j + 1];
    result.values[j] = chain.payoffs[j].cwiseMax(result.continuations[j]);
    result.stop_region[j].resize(chain.num_states);
    for (int i = 0; i < chain.num_states; ++i)
      result.stop_region[j][i] = chain.payoffs[j](i) >= result.continuations[j](i);
  }
  return result;
}

double tree_price(const TreeSpec& spec, const std::vector<int>& exercise_dates) {
  spec.model.validate();
  if (spec.model.num_assets != 1)
    throw std::invalid_argument("tree_price: single-asset models only");
  if (spec.steps_per_period < 1)
    throw std::invalid_argument("tree_price: steps_per_period must be >= 1");

  const MarketModel& model = spec.model;
  const int num_dates = model.exercise_steps;
  std::vector<bool> can_exercise(num_dates + 1, exercise_dates.empty());
  for (int j : exercise_dates) {
    if (j < 0 || j > num_dates) throw std::invalid_argument("tree_price: bad exercise date");
    can_exercise[j] = true;
  }

  const int levels = spec.steps_per_period * num_dates;
  const double dt = model.maturity / levels;
  const double up = std::exp(model.sigma * std::sqrt(dt));
  const double down = 1.0 / up;
  const double growth = std::exp((model.rate - model.dividend) * dt);
  const double q = (growth - down) / (up - down);
  if (!(q > 0.0 && q < 1.0))
    throw std::runtime_error("tree_price: grid too coarse for these parameters");
  const double disc = std::exp(-model.rate * dt);

  // Terminal layer: exercise value if the last date is allowed, else zero.
  std::vector<double> value(levels + 1);
  for (int i = 0; i <= levels; ++i) {
    const double s = model.spot * std::pow(up, 2 * i - levels);
    value[i] = can_exercise[num_dates] ? std::max(s - model.strike, 0.0) : 0.0;
  }

  for (int level = levels - 1; level >= 0; --level) {
    const bool bermudan = (level % spec.steps_per_period == 0) &&
                          can_exercise[level / spec.steps_per_period];
    for (int i = 0; i <= level; ++i) {
      double v = disc * (q * value[i + 1] + (1.0 - q) * value[i]);
      if (bermudan) {
        const double s = model.spot * std::pow(up, 2 * i - level);
        v = std::max(v, s - model.strike);
      }
      value[i] = v;
    }
  }
  return value[0];
}

namespace {

/// Chain adapter for the pseudo-regression cores: states are encoded as the
/// positive real 1 + index, the basis is the set of per-state indicators and
/// mu is uniform, enumerated exactly (sample m lies in state m mod s).
struct ChainProblem {
  const FiniteChain* chain;
  const GramMatrix* gram_matrix;
  RngStream step_rng;

  struct Scratch {};

  int dates() const { return chain->num_dates; }
  int dim() const { return 1; }
  std::size_t basis_size() const { return static_cast<std::size_t>(chain->num_states); }
  const GramMatrix& gram() const { return *gram_matrix; }

  static int state_of(const double* x) { return static_cast<int>(*x + 0.5) - 1; }

  void draw_mu(std::size_t m, double* out, Scratch&) const {
    out[0] = 1.0 + static_cast<double>(m % chain->num_states);
  }

  void transition(const double* x, int to_date, std::uint64_t slot, double* out,
                  Scratch&) const {
    const auto& row = chain->transition(to_date).row(state_of(x));
    const double u = uniform_at(step_rng, slot);
    double acc = 0.0;
    int next = chain->num_states - 1;
    for (int i = 0; i < chain->num_states; ++i) {
      acc += row(i);
      if (u < acc) {
        next = i;
        break;
      }
    }
    out[0] = 1.0 + next;
  }

  double payoff(int j, const double* x) const { return chain->payoffs[j](state_of(x)); }

  void basis_values(const double* x, double* out, Scratch&) const {
    std::fill(out, out + chain->num_states, 0.0);
    out[state_of(x)] = 1.0;
  }
};

}  // namespace

ChainEmbedReport embed_chain_pricing(const FiniteChain& chain, const ChainEmbedConfig& config) {
  chain.validate();
  if (config.reuse_samples && !chain.homogeneous())
    throw std::invalid_argument("embed_chain_pricing: sample reuse needs a homogeneous chain");
  if (config.se_groups < 2)
    throw std::invalid_argument("embed_chain_pricing: need at least 2 SE groups");
  const int s = chain.num_states;
  const std::size_t count = (config.samples / s) * s;
  if (count == 0) throw std::invalid_argument("embed_chain_pricing: need at least s samples");

  // Uniform measure over the states: Gram is diag(1/s), known exactly.
  GramMatrix gram = GramMatrix::from_estimate(
      Eigen::MatrixXd::Identity(s, s) / static_cast<double>(s), GramProvenance::quadrature);

  detail::InductionOptions options;
  options.reuse_samples = config.reuse_samples;
  options.threads = config.threads;

  const auto run = [&](std::uint64_t seed, std::size_t samples) {
    ChainProblem problem{&chain, &gram, RngStream{seed, streams::kTraining + 1}};
    return config.variant == PseudoVariant::tv
               ? detail::tv_pseudo_core(problem, samples, options, nullptr)
               : detail::ls_pseudo_core(problem, samples, options, nullptr);
  };

  const std::vector<Eigen::VectorXd> coefs = run(config.seed, count);

  // Batch-means error bars: independent sub-runs at count/groups samples;
  // the full-run variance is the group variance divided by the group count.
  const int groups = config.se_groups;
  const std::size_t group_count = std::max<std::size_t>((count / groups / s) * s, s);
  std::vector<std::vector<Eigen::VectorXd>> group_fits(groups);
  for (int g = 0; g < groups; ++g)
    group_fits[g] = run(derive_seed(config.seed, 0x5E50 + g), group_count);

  const ChainDpResult exact = chain_dp(chain);
  ChainEmbedReport report;
  report.samples_used = count;
  report.dates.resize(chain.num_dates);

  for (int j = 0; j < chain.num_dates; ++j) {
    ChainEmbedDate& date = report.dates[j];
    date.fitted = coefs[j];
    date.exact = exact.continuations[j];
    double err_sq = 0.0;
    double se_sq = 0.0;
    for (int k = 0; k < s; ++k) {
      const double diff = date.fitted(k) - date.exact(k);
      err_sq += diff * diff;
      double sum = 0.0, sumsq = 0.0;
      for (int g = 0; g < groups; ++g) {
        const double v = group_fits[g][j](k);
        sum += v;
        sumsq += v * v;
      }
      const double mean = sum / groups;
      const double group_var =
          std::max(0.0, (sumsq - groups * mean * mean) / static_cast<double>(groups - 1));
      // variance scales like 1/M between the group size and the full run
      se_sq += group_var * static_cast<double>(group_count) / static_cast<double>(count);
    }
    date.l2_error = std::sqrt(err_sq / s);
    date.l2_se = std::sqrt(se_sq / s);
  }

  report.exact_value0 = exact.values[0];
  report.value0 = chain.payoffs[0].cwiseMax(coefs[0]);
  report.max_value0_error = (report.value0 - report.exact_value0).cwiseAbs().maxCoeff();
  return report;
}

}  // namespace optstop
