// SPDX-License-Identifier: MIT
#include "optstop/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "optstop/basis.hpp"
#include "optstop/rng.hpp"

namespace optstop {

const char* to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::tv_standard: return "tv_standard";
    case Algorithm::tv_pseudo: return "tv_pseudo";
    case Algorithm::ls_standard: return "ls_standard";
    case Algorithm::ls_pseudo: return "ls_pseudo";
  }
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "tv_standard") return Algorithm::tv_standard;
  if (name == "tv_pseudo") return Algorithm::tv_pseudo;
  if (name == "ls_standard") return Algorithm::ls_standard;
  if (name == "ls_pseudo") return Algorithm::ls_pseudo;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

bool is_pseudo(Algorithm algorithm) {
  return algorithm == Algorithm::tv_pseudo || algorithm == Algorithm::ls_pseudo;
}

std::size_t ExperimentConfig::basis_size() const {
  std::size_t k = basis_count(model.num_assets, degree);
  return k + (augment_payoff ? 1 : 0);
}

MuParams ExperimentConfig::mu_params() const {
  MuParams mu;
  mu.log_mean = std::log(model.spot) + mu_mean_offset;
  mu.log_sd = mu_sd;
  mu.dim = model.num_assets;
  return mu;
}

void ExperimentConfig::validate() const {
  model.validate();
  if (degree < 0) throw std::invalid_argument("config: degree must be >= 0");
  if (sample_count == 0) throw std::invalid_argument("config: samples must be >= 1");
  if (!has_seed) throw std::invalid_argument("config: seed must be set explicitly");
  if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
  if (!(mu_sd > 0.0)) throw std::invalid_argument("config: mu_sd must be > 0");
  if (!is_pseudo(algorithm) && sample_count < basis_size())
    throw std::invalid_argument("config: standard regression needs samples >= K");
  if (augment_payoff && gram_sample_count == 0)
    throw std::invalid_argument("config: augmented basis needs gram_samples >= 1");
}

namespace {

double maxcall_raw(const double* x, int n, double strike) {
  double best = 0.0;
  for (int i = 0; i < n; ++i) best = std::max(best, x[i]);
  return std::max(best - strike, 0.0);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();

  ExperimentResult result;
  result.config = config;

  const MarketModel& model = config.model;
  const MuParams mu = config.mu_params();
  BasisSystem basis = hermite_basis(model.num_assets, config.degree, mu);
  GramMatrix gram = GramMatrix::identity(basis.size());

  if (config.augment_payoff) {
    // The payoff direction is orthonormalized on one sample batch, the Gram
    // of the augmented system is then estimated on a fresh one.
    const int n = model.num_assets;
    const double strike = model.strike;
    auto raw = [n, strike](const double* x) { return maxcall_raw(x, n, strike); };
    const auto fit_samples = sample_mu(mu, config.gram_sample_count,
                                       {config.seed, streams::kGram}, config.threads);
    AugmentResult augmented =
        orthonormalize_augmented(basis, raw, "maxcall_payoff", fit_samples);
    basis = augmented.system;
    if (basis.kind == BasisKind::augmented) {
      const auto check_samples = sample_mu(mu, config.gram_sample_count,
                                           {config.seed, streams::kGram + 1}, config.threads);
      gram = optstop::gram(basis, GramProvenance::monte_carlo, check_samples, 64,
                           config.threads);
      result.gram_min_eigenvalue = gram.min_eigenvalue();
      result.gram_max_eigenvalue = gram.max_eigenvalue();
    }
  }

  PseudoOptions options;
  options.reuse_samples = config.reuse_samples;
  options.threads = config.threads;

  const RngStream train_rng{config.seed, streams::kTraining};
  const auto t_train = std::chrono::steady_clock::now();
  switch (config.algorithm) {
    case Algorithm::tv_standard:
    case Algorithm::ls_standard: {
      TrajectoryBatch batch =
          simulate_paths(model, PathOrigin::fixed_x0, std::nullopt, config.sample_count,
                         train_rng, config.threads, &result.counters);
      result.policy = config.algorithm == Algorithm::tv_standard
                          ? tv_standard(batch, basis, model, &result.counters, config.threads)
                          : ls_standard(batch, basis, model, &result.counters, config.threads);
      break;
    }
    case Algorithm::tv_pseudo:
      result.policy = tv_pseudo(model, mu, basis, gram, config.sample_count, train_rng, options,
                                &result.counters);
      break;
    case Algorithm::ls_pseudo:
      result.policy = ls_pseudo(model, mu, basis, gram, config.sample_count, train_rng, options,
                                &result.counters);
      break;
  }
  result.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_train).count();

  result.v0_direct = price_at_origin(result.policy, model);
  if (config.eval_count > 0) {
    result.price = evaluate_policy(result.policy, model, config.eval_count,
                                   {config.seed, streams::kEvaluation}, config.threads,
                                   &result.counters);
  } else {
    result.price.value = result.v0_direct;
    result.price.std_error = 0.0;
    result.price.method =
        is_pseudo(config.algorithm) ? FitMethod::pseudo : FitMethod::standard_lsq;
    result.price.eval_count = 0;
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": empty key or value");
    if (!kv.emplace(key, value).second)
      throw std::invalid_argument("config: duplicate key '" + key + "'");
  }
  return kv;
}

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& value);

template <>
double parse_number<double>(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  const double v = std::stod(value, &used);
  if (used != value.size())
    throw std::invalid_argument("config: bad numeric value for '" + key + "'");
  return v;
}

template <>
long long parse_number<long long>(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  const long long v = std::stoll(value, &used);
  if (used != value.size())
    throw std::invalid_argument("config: bad integer value for '" + key + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw std::invalid_argument("config: bad boolean value for '" + key + "'");
}

}  // namespace

ExperimentConfig config_from_key_values(const std::map<std::string, std::string>& kv) {
  ExperimentConfig config;
  // The max-call experiment defaults; any key can override them.
  config.model.num_assets = 2;
  config.model.rate = 0.05;
  config.model.dividend = 0.1;
  config.model.sigma = 0.2;
  config.model.spot = 100.0;
  config.model.maturity = 3.0;
  config.model.exercise_steps = 9;
  config.model.strike = 100.0;
  config.mu_mean_offset = -0.105;

  for (const auto& [key, value] : kv) {
    if (key == "name") config.name = value;
    else if (key == "algorithm") config.algorithm = algorithm_from_string(value);
    else if (key == "assets") config.model.num_assets = static_cast<int>(parse_number<long long>(key, value));
    else if (key == "rate") config.model.rate = parse_number<double>(key, value);
    else if (key == "dividend") config.model.dividend = parse_number<double>(key, value);
    else if (key == "sigma") config.model.sigma = parse_number<double>(key, value);
    else if (key == "spot") config.model.spot = parse_number<double>(key, value);
    else if (key == "maturity") config.model.maturity = parse_number<double>(key, value);
    else if (key == "exercise_steps") config.model.exercise_steps = static_cast<int>(parse_number<long long>(key, value));
    else if (key == "strike") config.model.strike = parse_number<double>(key, value);
    else if (key == "degree") config.degree = static_cast<int>(parse_number<long long>(key, value));
    else if (key == "samples") config.sample_count = static_cast<std::size_t>(parse_number<long long>(key, value));
    else if (key == "eval_samples") config.eval_count = static_cast<std::size_t>(parse_number<long long>(key, value));
    else if (key == "mu_mean_offset") config.mu_mean_offset = parse_number<double>(key, value);
    else if (key == "mu_sd") config.mu_sd = parse_number<double>(key, value);
    else if (key == "seed") { config.seed = static_cast<std::uint64_t>(parse_number<long long>(key, value)); config.has_seed = true; }
    else if (key == "reuse_samples") config.reuse_samples = parse_bool(key, value);
    else if (key == "threads") config.threads = static_cast<int>(parse_number<long long>(key, value));
    else if (key == "augment_payoff") config.augment_payoff = parse_bool(key, value);
    else if (key == "gram_samples") config.gram_sample_count = static_cast<std::size_t>(parse_number<long long>(key, value));
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("load_config: cannot open " + file.string());
  std::stringstream buffer;
  buffer << is.rdbuf();
  return config_from_key_values(parse_key_values(buffer.str()));
}

namespace {

nlohmann::ordered_json config_json(const ExperimentConfig& config) {
  nlohmann::ordered_json j;
  j["name"] = config.name;
  j["algorithm"] = to_string(config.algorithm);
  j["assets"] = config.model.num_assets;
  j["rate"] = config.model.rate;
  j["dividend"] = config.model.dividend;
  j["sigma"] = config.model.sigma;
  j["spot"] = config.model.spot;
  j["maturity"] = config.model.maturity;
  j["exercise_steps"] = config.model.exercise_steps;
  j["strike"] = config.model.strike;
  j["degree"] = config.degree;
  j["basis_size"] = config.basis_size();
  j["samples"] = config.sample_count;
  j["eval_samples"] = config.eval_count;
  j["mu_mean_offset"] = config.mu_mean_offset;
  j["mu_sd"] = config.mu_sd;
  j["seed"] = config.seed;
  j["reuse_samples"] = config.reuse_samples;
  // threads are an execution detail, not part of the record: results are
  // identical for any thread count
  j["augment_payoff"] = config.augment_payoff;
  j["gram_samples"] = config.gram_sample_count;
  return j;
}

}  // namespace

std::string result_record_json(const ExperimentResult& result, bool include_wall_time) {
  nlohmann::ordered_json j;
  j["config"] = config_json(result.config);
  j["price"] = {{"value", result.price.value},
                {"std_error", result.price.std_error},
                {"eval_samples", result.price.eval_count}};
  j["v0_direct"] = result.v0_direct;
  j["counters"] = {{"sim_steps", result.counters.sim_steps},
                   {"basis_evals", result.counters.basis_evals},
                   {"flops", result.counters.flops}};
  if (include_wall_time) {
    j["wall_seconds"] = result.wall_seconds;
    j["train_seconds"] = result.train_seconds;
  }
  nlohmann::ordered_json policy;
  policy["method"] = result.policy.method == FitMethod::pseudo ? "pseudo" : "standard_lsq";
  policy["rank_deficient"] = result.policy.rank_deficient;
  nlohmann::ordered_json basis;
  basis["kind"] = result.policy.basis.kind == BasisKind::augmented ? "augmented"
                                                                   : "hermite_orthonormal";
  basis["dim"] = result.policy.basis.index_set.dim;
  basis["max_degree"] = result.policy.basis.index_set.max_degree;
  basis["ordering"] = "graded_lex";
  basis["log_mean"] = result.policy.basis.mu.log_mean;
  basis["log_sd"] = result.policy.basis.mu.log_sd;
  if (result.policy.basis.kind == BasisKind::augmented) {
    auto labels = nlohmann::ordered_json::array();
    for (const auto& extra : result.policy.basis.extra) labels.push_back(extra.label);
    basis["extra"] = labels;
    basis["gram_min_eigenvalue"] = result.gram_min_eigenvalue;
    basis["gram_max_eigenvalue"] = result.gram_max_eigenvalue;
  }
  policy["basis"] = basis;
  auto coefs = nlohmann::ordered_json::array();
  for (const auto& beta : result.policy.coefs) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < beta.size(); ++i) row.push_back(beta(i));
    coefs.push_back(std::move(row));
  }
  policy["continuation_coefficients"] = std::move(coefs);
  j["policy"] = std::move(policy);
  return j.dump(2) + "\n";
}

void write_result_record(const ExperimentResult& result, const std::filesystem::path& file) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("write_result_record: cannot open " + file.string());
  os << result_record_json(result);
  if (!os) throw std::runtime_error("write_result_record: write failed for " + file.string());
}

}  // namespace optstop
