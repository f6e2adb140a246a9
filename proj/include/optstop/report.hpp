// SPDX-License-Identifier: MIT
#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optstop/experiment.hpp"

namespace optstop {

/// One measured point of the cost study.
struct CostScalingPoint {
  Algorithm algorithm = Algorithm::tv_pseudo;
  std::size_t basis_size = 0;
  std::size_t sample_count = 0;
  CostCounters counters;
  double train_seconds = 0.0;
};

struct CostExponents {
  Algorithm algorithm = Algorithm::tv_pseudo;
  double flops_vs_k = 0.0;  // log-log slope at fixed M
  double flops_vs_m = 0.0;  // log-log slope at fixed K
};

struct CostReport {
  std::vector<CostScalingPoint> points;
  std::vector<CostExponents> exponents;
};

/// Fits the flop-counter scaling exponents per algorithm: vs K over the
/// points sharing a sample count, and vs M over the points sharing a basis
/// size. Each fitted axis needs at least three points.
CostReport cost_report(std::span<const CostScalingPoint> points);

/// Error-vs-M sweep against a fixed reference value. Each grid point trains
/// the configured algorithm with that M, evaluates the policy, and bootstraps
/// the evaluation-stage payoffs for an error bar on the estimate.
struct ConvergenceConfig {
  ExperimentConfig base;
  std::vector<std::size_t> m_grid;
  double reference = 0.0;
  int bootstrap_rounds = 200;
};

struct ConvergencePoint {
  std::size_t sample_count = 0;
  double price = 0.0;
  double abs_error = 0.0;
  double bootstrap_se = 0.0;  // bootstrap sd of the evaluation mean
};

struct ConvergenceReport {
  std::vector<ConvergencePoint> points;
  double reference = 0.0;
  double slope = 0.0;  // log-log slope of abs_error vs M
};

ConvergenceReport convergence_sweep(const ConvergenceConfig& config);

/// One row of the PR-vs-SR comparison table (the tables' layout:
/// x0 | PR value (SE) | SR value (SE) | parameters).
struct ComparisonRow {
  double spot = 0.0;
  double pr_value = 0.0;
  double pr_se = 0.0;
  double sr_value = 0.0;
  double sr_se = 0.0;
  std::string parameters;
};

/// Delimiter-separated table with a header line; numbers are written with
/// round-trip precision so parsing the file recovers them exactly.
void write_comparison_table(std::span<const ComparisonRow> rows,
                            const std::filesystem::path& file);
std::vector<ComparisonRow> read_comparison_table(const std::filesystem::path& file);

/// Static charts (SVG): paired PR/SR timing bars and a log-log convergence
/// line with error bars.
void write_timing_chart(std::span<const std::string> labels, std::span<const double> pr_seconds,
                        std::span<const double> sr_seconds, const std::filesystem::path& file);
void write_convergence_chart(const ConvergenceReport& report,
                             const std::filesystem::path& file);

/// CSV dump of a cost report (one row per point plus fitted exponents).
void write_cost_report(const CostReport& report, const std::filesystem::path& file);

}  // namespace optstop
