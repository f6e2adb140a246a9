// SPDX-License-Identifier: MIT
//
// Experiment runner for the regression-based Bermudan pricers.
//
//   optstop price    --config run.cfg --out results/
//   optstop table    --preset table1 --out results/
//   optstop cost     --out results/ [--samples 200000]
//   optstop converge --config run.cfg --m-grid 1000,10000,100000 [--reference tree]
//   optstop verify
//
// Every run is seeded explicitly (configs must carry `seed`, or pass
// --seed); records re-run byte-identically apart from wall times.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "optstop/experiment.hpp"
#include "optstop/oracle.hpp"
#include "optstop/report.hpp"

namespace {

using namespace optstop;

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

struct GridSpec {
  ExperimentConfig base;
  std::vector<double> spots;
  std::vector<Algorithm> algorithms;
};

ExperimentConfig maxcall_base() {
  ExperimentConfig cfg;
  cfg.model.rate = 0.05;
  cfg.model.dividend = 0.1;
  cfg.model.sigma = 0.2;
  cfg.model.maturity = 3.0;
  cfg.model.strike = 100.0;
  cfg.model.spot = 100.0;
  cfg.degree = 5;
  cfg.seed = 20260810;
  cfg.has_seed = true;
  return cfg;
}

GridSpec tv_block(int assets, int degree, double sigma_hat, double offset,
                  std::size_t samples) {
  GridSpec grid;
  grid.base = maxcall_base();
  grid.base.model.num_assets = assets;
  grid.base.model.exercise_steps = 9;
  grid.base.degree = degree;
  grid.base.mu_mean_offset = offset;
  grid.base.mu_sd = sigma_hat;
  grid.base.sample_count = grid.base.eval_count = samples;
  grid.spots = {90.0, 100.0, 110.0};
  grid.algorithms = {Algorithm::tv_pseudo, Algorithm::tv_standard};
  return grid;
}

// The comparison grids: table1 stacks the four asset-count blocks with their
// per-block measure parameters, table2 is the n = 4 Longstaff–Schwartz block;
// desk is table1 at desk scale (M = M_eval = 2e5).
std::vector<GridSpec> preset_grids(const std::string& name) {
  const std::size_t samples = name == "desk" ? 200000 : 2000000;
  if (name == "table1" || name == "desk") {
    return {tv_block(2, 5, 0.26, -0.105, samples), tv_block(3, 5, 0.29, -0.105, samples),
            tv_block(4, 5, 0.32, -0.179, samples), tv_block(5, 4, 0.32, -0.21, samples)};
  }
  if (name == "table2") {
    GridSpec grid = tv_block(4, 5, 0.32, -0.179, samples);
    grid.base.model.exercise_steps = 4;
    grid.algorithms = {Algorithm::ls_pseudo, Algorithm::ls_standard};
    return {grid};
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

GridSpec grid_from_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << is.rdbuf();
  auto kv = parse_key_values(buffer.str());

  GridSpec grid;
  std::vector<std::string> spot_list{"100"};
  std::vector<std::string> algorithm_list{"tv_pseudo", "tv_standard"};
  if (auto it = kv.find("spot"); it != kv.end()) {
    spot_list = split_list(it->second);
    kv.erase(it);
  }
  if (auto it = kv.find("algorithm"); it != kv.end()) {
    algorithm_list = split_list(it->second);
    kv.erase(it);
  }
  grid.base = config_from_key_values(kv);
  for (const auto& s : spot_list) grid.spots.push_back(std::stod(s));
  for (const auto& a : algorithm_list) grid.algorithms.push_back(algorithm_from_string(a));
  return grid;
}

void apply_overrides(ExperimentConfig& cfg, const std::optional<std::uint64_t>& seed,
                     int threads) {
  if (seed) {
    cfg.seed = *seed;
    cfg.has_seed = true;
  }
  cfg.threads = threads;
}

std::string run_label(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << to_string(cfg.algorithm) << "_n" << cfg.model.num_assets << "_x"
     << static_cast<int>(cfg.model.spot) << "_m" << cfg.sample_count;
  return os.str();
}

int cmd_price(const std::string& config_path, const std::optional<std::uint64_t>& seed,
              const std::string& out_dir, int threads) {
  ExperimentConfig cfg = load_config(config_path);
  apply_overrides(cfg, seed, threads);
  const ExperimentResult result = run_experiment(cfg);
  std::filesystem::create_directories(out_dir);
  const auto record = std::filesystem::path(out_dir) / (cfg.name + ".json");
  write_result_record(result, record);
  std::printf("%s: price %.6f (se %.6f), direct value %.6f, %.2fs\n", cfg.name.c_str(),
              result.price.value, result.price.std_error, result.v0_direct,
              result.wall_seconds);
  std::printf("record: %s\n", record.string().c_str());
  return 0;
}

int cmd_table(const std::string& preset, const std::string& config_path,
              const std::optional<std::uint64_t>& seed, const std::string& out_dir,
              int threads) {
  std::vector<GridSpec> grids =
      config_path.empty() ? preset_grids(preset)
                          : std::vector<GridSpec>{grid_from_config(config_path)};
  std::filesystem::create_directories(out_dir);

  std::vector<ComparisonRow> rows;
  std::vector<std::string> labels;
  std::vector<double> pr_seconds, sr_seconds;
  for (GridSpec& grid : grids) {
    apply_overrides(grid.base, seed, threads);
    std::ostringstream params;
    params << "n=" << grid.base.model.num_assets << " K=" << grid.base.basis_size()
           << " sigma_hat=" << grid.base.mu_sd << " m=ln(x0)"
           << (grid.base.mu_mean_offset < 0 ? "" : "+") << grid.base.mu_mean_offset
           << " M=" << grid.base.sample_count;

    for (double spot : grid.spots) {
      ComparisonRow row;
      row.spot = spot;
      row.parameters = params.str();
      double pr_time = 0.0, sr_time = 0.0;
      for (Algorithm algorithm : grid.algorithms) {
        ExperimentConfig cfg = grid.base;
        cfg.model.spot = spot;
        cfg.algorithm = algorithm;
        cfg.name = run_label(cfg);
        const ExperimentResult result = run_experiment(cfg);
        write_result_record(result, std::filesystem::path(out_dir) / (cfg.name + ".json"));
        std::printf("n=%d x0=%6.1f  %-12s  %8.4f (%.4f)  [%.2fs]\n",
                    cfg.model.num_assets, spot, to_string(algorithm), result.price.value,
                    result.price.std_error, result.wall_seconds);
        if (is_pseudo(algorithm)) {
          row.pr_value = result.price.value;
          row.pr_se = result.price.std_error;
          pr_time = result.train_seconds;
        } else {
          row.sr_value = result.price.value;
          row.sr_se = result.price.std_error;
          sr_time = result.train_seconds;
        }
      }
      rows.push_back(row);
      labels.push_back("n=" + std::to_string(grid.base.model.num_assets) +
                       " x0=" + std::to_string(static_cast<int>(spot)));
      pr_seconds.push_back(pr_time);
      sr_seconds.push_back(sr_time);
    }
  }

  const auto table_path = std::filesystem::path(out_dir) / "comparison_table.csv";
  write_comparison_table(rows, table_path);
  std::printf("table: %s\n", table_path.string().c_str());
  if (!rows.empty()) {
    const auto chart_path = std::filesystem::path(out_dir) / "timing_chart.svg";
    write_timing_chart(labels, pr_seconds, sr_seconds, chart_path);
    std::printf("chart: %s\n", chart_path.string().c_str());
  }
  return 0;
}

int cmd_cost(const std::optional<std::uint64_t>& seed, const std::string& out_dir, int threads,
             std::size_t samples, const std::string& degrees_csv, const std::string& m_csv) {
  std::vector<int> degrees;
  for (const auto& d : split_list(degrees_csv)) degrees.push_back(std::stoi(d));
  std::vector<std::size_t> m_grid;
  for (const auto& m : split_list(m_csv)) m_grid.push_back(std::stoull(m));
  if (degrees.size() < 3 || m_grid.size() < 3)
    throw std::invalid_argument("cost: need at least 3 degrees and 3 sample counts");

  ExperimentConfig base;
  base.model.num_assets = 2;
  base.model.rate = 0.05;
  base.model.dividend = 0.1;
  base.model.sigma = 0.2;
  base.model.spot = 100.0;
  base.model.maturity = 3.0;
  base.model.exercise_steps = 9;
  base.model.strike = 100.0;
  base.mu_mean_offset = -0.105;
  base.mu_sd = 0.26;
  base.eval_count = 0;  // cost study measures the regression stage only
  base.seed = seed.value_or(20260810);
  base.has_seed = true;
  base.threads = threads;

  std::vector<CostScalingPoint> points;
  const auto measure = [&](Algorithm algorithm, int degree, std::size_t m) {
    ExperimentConfig cfg = base;
    cfg.algorithm = algorithm;
    cfg.degree = degree;
    cfg.sample_count = m;
    cfg.name = run_label(cfg) + "_p" + std::to_string(degree);
    const ExperimentResult result = run_experiment(cfg);
    CostScalingPoint point;
    point.algorithm = algorithm;
    point.basis_size = cfg.basis_size();
    point.sample_count = m;
    point.counters = result.counters;
    point.train_seconds = result.train_seconds;
    points.push_back(point);
    std::printf("%-12s K=%4zu M=%8zu flops=%14llu  %.3fs\n", to_string(algorithm),
                point.basis_size, m, static_cast<unsigned long long>(point.counters.flops),
                point.train_seconds);
  };
  for (Algorithm algorithm : {Algorithm::tv_standard, Algorithm::tv_pseudo}) {
    for (int degree : degrees) measure(algorithm, degree, samples);
    for (std::size_t m : m_grid) measure(algorithm, degrees[degrees.size() / 2], m);
  }

  const CostReport report = cost_report(points);
  for (const auto& e : report.exponents)
    std::printf("%-12s flops ~ K^%.3f (fixed M), ~ M^%.3f (fixed K)\n",
                to_string(e.algorithm), e.flops_vs_k, e.flops_vs_m);
  std::filesystem::create_directories(out_dir);
  const auto path = std::filesystem::path(out_dir) / "cost_report.csv";
  write_cost_report(report, path);
  std::printf("report: %s\n", path.string().c_str());
  return 0;
}

int cmd_converge(const std::string& config_path, const std::optional<std::uint64_t>& seed,
                 const std::string& out_dir, int threads, const std::string& m_csv,
                 const std::string& reference_spec) {
  ConvergenceConfig config;
  config.base = load_config(config_path);
  apply_overrides(config.base, seed, threads);
  for (const auto& m : split_list(m_csv)) config.m_grid.push_back(std::stoull(m));

  if (reference_spec == "tree") {
    if (config.base.model.num_assets != 1)
      throw std::invalid_argument("tree reference needs a single-asset config");
    config.reference = tree_price(TreeSpec{config.base.model, 400});
    std::printf("tree reference: %.6f\n", config.reference);
  } else {
    config.reference = std::stod(reference_spec);
  }

  const ConvergenceReport report = convergence_sweep(config);
  for (const auto& p : report.points)
    std::printf("M=%8zu  price=%.6f  |error|=%.6f  (boot se %.6f)\n", p.sample_count, p.price,
                p.abs_error, p.bootstrap_se);
  std::printf("slope vs M: %.3f\n", report.slope);

  std::filesystem::create_directories(out_dir);
  const auto chart = std::filesystem::path(out_dir) / "convergence.svg";
  write_convergence_chart(report, chart);
  std::ofstream csv(std::filesystem::path(out_dir) / "convergence.csv");
  csv << "samples,price,abs_error,bootstrap_se\n";
  for (const auto& p : report.points)
    csv << p.sample_count << ',' << p.price << ',' << p.abs_error << ',' << p.bootstrap_se
        << '\n';
  std::printf("chart: %s\n", chart.string().c_str());
  return 0;
}

FiniteChain builtin_chain() {
  FiniteChain chain;
  chain.num_states = 3;
  chain.num_dates = 3;
  chain.payoffs.resize(4);
  chain.payoffs[0] = Eigen::Vector3d(0.2, 1.1, 0.0);
  chain.payoffs[1] = Eigen::Vector3d(1.4, 0.3, 0.9);
  chain.payoffs[2] = Eigen::Vector3d(0.0, 2.2, 0.6);
  chain.payoffs[3] = Eigen::Vector3d(1.8, 0.5, 1.2);
  Eigen::Matrix3d p;
  p << 0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.25, 0.25, 0.5;
  chain.transitions.push_back(p);
  return chain;
}

int cmd_verify(int threads) {
  int failures = 0;
  const auto check = [&](const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %s%s%s\n", ok ? "PASS" : "FAIL", name, detail.empty() ? "" : ": ",
                detail.c_str());
    if (!ok) ++failures;
  };

  // Chain embedding against exact dynamic programming.
  const FiniteChain chain = builtin_chain();
  for (const auto variant : {PseudoVariant::tv, PseudoVariant::ls}) {
    ChainEmbedConfig config;
    config.variant = variant;
    config.samples = 99999;
    config.seed = 1234;
    config.threads = threads;
    const ChainEmbedReport report = embed_chain_pricing(chain, config);
    bool ok = true;
    double worst = 0.0;
    for (const auto& date : report.dates) {
      ok = ok && date.l2_error <= 4.0 * date.l2_se;
      worst = std::max(worst, date.l2_error);
    }
    std::ostringstream detail;
    detail << "max L2 error " << worst;
    check(variant == PseudoVariant::tv ? "chain tv_pseudo" : "chain ls_pseudo", ok,
          detail.str());
  }

  // Single-asset prices against the dense binomial tree.
  MarketModel model;
  model.num_assets = 1;
  model.rate = 0.05;
  model.dividend = 0.1;
  model.sigma = 0.2;
  model.spot = 100.0;
  model.maturity = 3.0;
  model.exercise_steps = 9;
  model.strike = 100.0;
  const double oracle = tree_price(TreeSpec{model, 400});
  const MuParams mu = lognormal_mu(model, 1.5, 0.26);
  const BasisSystem basis = hermite_basis(1, 5, mu);
  const GramMatrix gram = GramMatrix::identity(basis.size());
  PseudoOptions options;
  options.threads = threads;
  for (const bool ls : {false, true}) {
    const StoppingPolicy policy =
        ls ? ls_pseudo(model, mu, basis, gram, 500000, {42, streams::kTraining}, options)
           : tv_pseudo(model, mu, basis, gram, 500000, {42, streams::kTraining}, options);
    const PriceEstimate price =
        evaluate_policy(policy, model, 500000, {43, streams::kEvaluation}, threads);
    const double tol = std::max(0.05, 4.0 * price.std_error);
    std::ostringstream detail;
    detail << "price " << price.value << " vs tree " << oracle;
    check(ls ? "tree ls_pseudo" : "tree tv_pseudo", std::fabs(price.value - oracle) <= tol,
          detail.str());
  }

  return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regression-based Bermudan option pricing experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "results", preset = "desk";
  std::optional<std::uint64_t> seed;
  int threads = 1;

  auto add_common = [&](CLI::App* cmd, bool with_config) {
    if (with_config) cmd->add_option("--config", config_path, "experiment config file");
    cmd->add_option("--seed", seed, "override the config seed");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--threads", threads, "worker threads (results do not depend on this)");
  };

  auto* price = app.add_subcommand("price", "run one configured experiment");
  add_common(price, true);
  price->get_option("--config")->required();

  auto* table = app.add_subcommand("table", "PR-vs-SR comparison grid");
  add_common(table, true);
  table->add_option("--preset", preset, "table1 | table2 | desk");

  auto* cost = app.add_subcommand("cost", "counter/time scaling study");
  add_common(cost, false);
  std::size_t cost_samples = 200000;
  std::string degrees_csv = "2,3,4,5,6,7", m_csv_cost = "50000,100000,200000";
  cost->add_option("--samples", cost_samples, "M for the K sweep");
  cost->add_option("--degrees", degrees_csv, "comma list of degrees p for the K sweep");
  cost->add_option("--m-grid", m_csv_cost, "comma list of sample counts for the M sweep");

  auto* converge = app.add_subcommand("converge", "error-vs-M sweep against a reference");
  add_common(converge, true);
  converge->get_option("--config")->required();
  std::string m_csv = "10000,40000,160000", reference_spec = "tree";
  converge->add_option("--m-grid", m_csv, "comma list of sample counts");
  converge->add_option("--reference", reference_spec, "'tree' or a numeric reference value");

  auto* verify = app.add_subcommand("verify", "oracle cross-checks (chain DP, binomial tree)");
  verify->add_option("--threads", threads, "worker threads");

  try {
    app.parse(argc, argv);
    if (price->parsed()) return cmd_price(config_path, seed, out_dir, threads);
    if (table->parsed()) return cmd_table(preset, config_path, seed, out_dir, threads);
    if (cost->parsed())
      return cmd_cost(seed, out_dir, threads, cost_samples, degrees_csv, m_csv_cost);
    if (converge->parsed())
      return cmd_converge(config_path, seed, out_dir, threads, m_csv, reference_spec);
    if (verify->parsed()) return cmd_verify(threads);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    nlohmann::ordered_json err;
    err["error"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
