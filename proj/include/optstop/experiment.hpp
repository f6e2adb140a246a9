// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "optstop/counters.hpp"
#include "optstop/market.hpp"
#include "optstop/stopping.hpp"

namespace optstop {

enum class Algorithm { tv_standard, tv_pseudo, ls_standard, ls_pseudo };

const char* to_string(Algorithm algorithm);
Algorithm algorithm_from_string(const std::string& name);
bool is_pseudo(Algorithm algorithm);

/// One pricing run. The sampling measure is the componentwise log-normal
/// with log-mean ln(spot) + mu_mean_offset and log-sd mu_sd; the basis is
/// the orthonormal tensor-Hermite family of total degree <= degree
/// (optionally augmented by the payoff). Seeds are always explicit.
struct ExperimentConfig {
  std::string name = "run";
  MarketModel model;
  Algorithm algorithm = Algorithm::tv_pseudo;
  int degree = 5;                     // p; K = (p+n)!/(p! n!)
  std::size_t sample_count = 200000;  // M (regression stage)
  std::size_t eval_count = 200000;    // M_eval; 0 = report the direct value only
  double mu_mean_offset = 0.0;        // m - ln(spot)
  double mu_sd = 0.26;                // sigma_hat
  std::uint64_t seed = 0;
  bool has_seed = false;  // configs must set the seed explicitly
  bool reuse_samples = true;
  int threads = 1;
  bool augment_payoff = false;
  std::size_t gram_sample_count = 1000000;  // augmented-basis estimation batch

  std::size_t basis_size() const;
  MuParams mu_params() const;
  void validate() const;
};

struct ExperimentResult {
  ExperimentConfig config;
  PriceEstimate price;      // evaluation-stage estimate (eval_count > 0)
  double v0_direct = 0.0;   // max(f_0, c_0)(x0)
  CostCounters counters;
  double wall_seconds = 0.0;
  double train_seconds = 0.0;  // continuation-function construction only
  StoppingPolicy policy;
  double gram_min_eigenvalue = 1.0;
  double gram_max_eigenvalue = 1.0;
};

/// Runs the configured algorithm end to end with instrumented counters.
/// Deterministic given (seed, config): re-running byte-reproduces the result
/// record except for the wall-time fields.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Flat key = value configuration text; '#' starts a comment. Unknown keys
/// are rejected. List-valued keys (grids) are handled by the CLI.
std::map<std::string, std::string> parse_key_values(const std::string& text);
ExperimentConfig config_from_key_values(const std::map<std::string, std::string>& kv);
ExperimentConfig load_config(const std::filesystem::path& file);

/// Machine-readable result record (JSON), fixed key order. Pass
/// include_wall_time = false to get the byte-reproducible portion.
std::string result_record_json(const ExperimentResult& result, bool include_wall_time = true);
void write_result_record(const ExperimentResult& result, const std::filesystem::path& file);

}  // namespace optstop
