// SPDX-License-Identifier: MIT
#include "optstop/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "optstop/regression.hpp"
#include "optstop/rng.hpp"

namespace optstop {

namespace {

std::string round_trip(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("table: bad number '" + s + "'");
  return v;
}

}  // namespace

CostReport cost_report(std::span<const CostScalingPoint> points) {
  CostReport report;
  report.points.assign(points.begin(), points.end());

  std::map<Algorithm, std::vector<const CostScalingPoint*>> by_alg;
  for (const auto& p : points) by_alg[p.algorithm].push_back(&p);

  for (const auto& [alg, group] : by_alg) {
    // vs K: the largest family sharing one sample count; vs M: sharing one K.
    std::map<std::size_t, std::vector<const CostScalingPoint*>> by_m, by_k;
    for (const auto* p : group) {
      by_m[p->sample_count].push_back(p);
      by_k[p->basis_size].push_back(p);
    }
    auto pick = [](auto& groups) -> std::vector<const CostScalingPoint*>* {
      std::vector<const CostScalingPoint*>* best = nullptr;
      for (auto& [key, members] : groups)
        if (!best || members.size() > best->size()) best = &members;
      return best;
    };
    auto* k_family = pick(by_m);
    auto* m_family = pick(by_k);
    if (!k_family || k_family->size() < 3 || !m_family || m_family->size() < 3)
      throw std::invalid_argument("cost_report: need at least 3 grid points per axis");

    CostExponents e;
    e.algorithm = alg;
    {
      std::vector<double> x, y;
      for (const auto* p : *k_family) {
        x.push_back(static_cast<double>(p->basis_size));
        y.push_back(static_cast<double>(p->counters.flops));
      }
      e.flops_vs_k = loglog_slope(x, y);
    }
    {
      std::vector<double> x, y;
      for (const auto* p : *m_family) {
        x.push_back(static_cast<double>(p->sample_count));
        y.push_back(static_cast<double>(p->counters.flops));
      }
      e.flops_vs_m = loglog_slope(x, y);
    }
    report.exponents.push_back(e);
  }
  return report;
}

ConvergenceReport convergence_sweep(const ConvergenceConfig& config) {
  if (config.m_grid.empty()) throw std::invalid_argument("convergence_sweep: empty M grid");
  ConvergenceReport report;
  report.reference = config.reference;

  for (std::size_t i = 0; i < config.m_grid.size(); ++i) {
    ExperimentConfig run = config.base;
    run.sample_count = config.m_grid[i];
    run.name = config.base.name + "_m" + std::to_string(run.sample_count);
    run.validate();

    // Train + evaluate, keeping the evaluation payoffs for the bootstrap.
    ExperimentResult result;
    result.config = run;
    const MuParams mu = run.mu_params();
    BasisSystem basis = hermite_basis(run.model.num_assets, run.degree, mu);
    GramMatrix gram = GramMatrix::identity(basis.size());
    PseudoOptions options;
    options.reuse_samples = run.reuse_samples;
    options.threads = run.threads;
    const RngStream train_rng{run.seed, streams::kTraining};

    StoppingPolicy policy;
    switch (run.algorithm) {
      case Algorithm::tv_standard:
      case Algorithm::ls_standard: {
        TrajectoryBatch batch = simulate_paths(run.model, PathOrigin::fixed_x0, std::nullopt,
                                               run.sample_count, train_rng, run.threads);
        policy = run.algorithm == Algorithm::tv_standard
                     ? tv_standard(batch, basis, run.model, nullptr, run.threads)
                     : ls_standard(batch, basis, run.model, nullptr, run.threads);
        break;
      }
      case Algorithm::tv_pseudo:
        policy = tv_pseudo(run.model, mu, basis, gram, run.sample_count, train_rng, options);
        break;
      case Algorithm::ls_pseudo:
        policy = ls_pseudo(run.model, mu, basis, gram, run.sample_count, train_rng, options);
        break;
    }

    std::vector<double> payoffs;
    PriceEstimate price = evaluate_policy(policy, run.model, run.eval_count,
                                          {run.seed, streams::kEvaluation}, run.threads, nullptr,
                                          &payoffs);

    ConvergencePoint point;
    point.sample_count = run.sample_count;
    point.price = price.value;
    point.abs_error = std::fabs(price.value - config.reference);

    // Bootstrap sd of the evaluation mean.
    const std::size_t count = payoffs.size();
    const RngStream boot_rng{derive_seed(run.seed, 0xB007 + i), streams::kDiagnostics};
    double sum = 0.0, sumsq = 0.0;
    for (int b = 0; b < config.bootstrap_rounds; ++b) {
      double acc = 0.0;
      const std::uint64_t base = static_cast<std::uint64_t>(b) * count;
      for (std::size_t m = 0; m < count; ++m) {
        const auto pick = static_cast<std::size_t>(uniform_at(boot_rng, base + m) * count);
        acc += payoffs[pick < count ? pick : count - 1];
      }
      const double mean = acc / static_cast<double>(count);
      sum += mean;
      sumsq += mean * mean;
    }
    const double rounds = config.bootstrap_rounds;
    const double mean = sum / rounds;
    point.bootstrap_se = std::sqrt(std::max(0.0, sumsq / rounds - mean * mean));
    report.points.push_back(point);
  }

  std::vector<double> x, y;
  for (const auto& p : report.points) {
    if (p.abs_error > 0.0) {
      x.push_back(static_cast<double>(p.sample_count));
      y.push_back(p.abs_error);
    }
  }
  report.slope = x.size() >= 2 ? loglog_slope(x, y) : 0.0;
  return report;
}

void write_comparison_table(std::span<const ComparisonRow> rows,
                            const std::filesystem::path& file) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("write_comparison_table: cannot open " + file.string());
  os << "x0,pr_value,pr_se,sr_value,sr_se,parameters\n";
  for (const auto& row : rows) {
    if (row.parameters.find(',') != std::string::npos ||
        row.parameters.find('\n') != std::string::npos)
      throw std::invalid_argument("comparison table: parameters must not contain delimiters");
    os << round_trip(row.spot) << ',' << round_trip(row.pr_value) << ','
       << round_trip(row.pr_se) << ',' << round_trip(row.sr_value) << ','
       << round_trip(row.sr_se) << ',' << row.parameters << '\n';
  }
  if (!os) throw std::runtime_error("write_comparison_table: write failed for " + file.string());
}

std::vector<ComparisonRow> read_comparison_table(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("read_comparison_table: cannot open " + file.string());
  std::string line;
  if (!std::getline(is, line) || line != "x0,pr_value,pr_se,sr_value,sr_se,parameters")
    throw std::runtime_error("read_comparison_table: bad header in " + file.string());
  std::vector<ComparisonRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (int i = 0; i < 5; ++i) {
      const auto comma = line.find(',', start);
      if (comma == std::string::npos)
        throw std::runtime_error("read_comparison_table: short row in " + file.string());
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    ComparisonRow row;
    row.spot = parse_double(fields[0]);
    row.pr_value = parse_double(fields[1]);
    row.pr_se = parse_double(fields[2]);
    row.sr_value = parse_double(fields[3]);
    row.sr_se = parse_double(fields[4]);
    row.parameters = line.substr(start);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

struct SvgCanvas {
  std::ostringstream body;
  int width, height;

  SvgCanvas(int w, int h) : width(w), height(h) {}

  void rect(double x, double y, double w, double h, const char* fill) {
    body << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
         << "\" fill=\"" << fill << "\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const char* stroke) {
    body << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
         << "\" stroke=\"" << stroke << "\" stroke-width=\"1\"/>\n";
  }
  void text(double x, double y, const std::string& s, int size = 11) {
    body << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
         << "\" font-family=\"sans-serif\">" << s << "</text>\n";
  }
  void circle(double x, double y, double r, const char* fill) {
    body << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"" << r << "\" fill=\"" << fill
         << "\"/>\n";
  }
  void save(const std::filesystem::path& file) const {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("chart: cannot open " + file.string());
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << body.str() << "</svg>\n";
    if (!os) throw std::runtime_error("chart: write failed for " + file.string());
  }
};

}  // namespace

void write_timing_chart(std::span<const std::string> labels, std::span<const double> pr_seconds,
                        std::span<const double> sr_seconds, const std::filesystem::path& file) {
  if (labels.size() != pr_seconds.size() || labels.size() != sr_seconds.size())
    throw std::invalid_argument("write_timing_chart: size mismatch");
  const int width = 120 + static_cast<int>(labels.size()) * 140;
  SvgCanvas svg(width, 320);
  double top = 0.0;
  for (double v : pr_seconds) top = std::max(top, v);
  for (double v : sr_seconds) top = std::max(top, v);
  if (top <= 0.0) top = 1.0;
  const double y0 = 270.0, plot_h = 220.0;
  svg.line(60, y0, width - 20, y0, "black");
  svg.text(10, 30, "seconds");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double x = 80.0 + 140.0 * static_cast<double>(i);
    const double hp = plot_h * pr_seconds[i] / top;
    const double hs = plot_h * sr_seconds[i] / top;
    svg.rect(x, y0 - hp, 40, hp, "#3572b0");
    svg.rect(x + 48, y0 - hs, 40, hs, "#c0392b");
    svg.text(x, y0 - hp - 6, round_trip(pr_seconds[i]).substr(0, 6), 10);
    svg.text(x + 48, y0 - hs - 6, round_trip(sr_seconds[i]).substr(0, 6), 10);
    svg.text(x, y0 + 18, labels[i]);
  }
  svg.rect(60, 290, 14, 10, "#3572b0");
  svg.text(80, 299, "pseudo regression (PR)");
  svg.rect(260, 290, 14, 10, "#c0392b");
  svg.text(280, 299, "standard regression (SR)");
  svg.save(file);
}

void write_convergence_chart(const ConvergenceReport& report,
                             const std::filesystem::path& file) {
  if (report.points.empty()) throw std::invalid_argument("write_convergence_chart: no points");
  SvgCanvas svg(520, 360);
  double min_m = 1e300, max_m = 0, min_e = 1e300, max_e = 0;
  for (const auto& p : report.points) {
    const double err = std::max(p.abs_error, 1e-12);
    min_m = std::min(min_m, static_cast<double>(p.sample_count));
    max_m = std::max(max_m, static_cast<double>(p.sample_count));
    min_e = std::min(min_e, err);
    max_e = std::max(max_e, err + p.bootstrap_se);
  }
  if (max_m <= min_m) max_m = min_m * 10;
  if (max_e <= min_e) max_e = min_e * 10;
  const auto xpix = [&](double m) {
    return 70.0 + 400.0 * (std::log(m) - std::log(min_m)) / (std::log(max_m) - std::log(min_m));
  };
  const auto ypix = [&](double e) {
    return 300.0 - 250.0 * (std::log(e) - std::log(min_e)) / (std::log(max_e) - std::log(min_e));
  };
  svg.line(70, 300, 490, 300, "black");
  svg.line(70, 300, 70, 30, "black");
  svg.text(220, 340, "samples M (log)");
  svg.text(10, 20, "|error| (log)");
  double px = 0, py = 0;
  bool first = true;
  for (const auto& p : report.points) {
    const double err = std::max(p.abs_error, 1e-12);
    const double x = xpix(static_cast<double>(p.sample_count));
    const double y = ypix(err);
    if (!first) svg.line(px, py, x, y, "#3572b0");
    const double lo = std::max(err - p.bootstrap_se, 1e-12);
    svg.line(x, ypix(lo), x, ypix(err + p.bootstrap_se), "#888888");
    svg.circle(x, y, 3, "#3572b0");
    px = x;
    py = y;
    first = false;
  }
  svg.text(320, 50, "slope " + round_trip(report.slope).substr(0, 7));
  svg.save(file);
}

void write_cost_report(const CostReport& report, const std::filesystem::path& file) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("write_cost_report: cannot open " + file.string());
  os << "algorithm,basis_size,samples,sim_steps,basis_evals,flops,train_seconds\n";
  for (const auto& p : report.points)
    os << to_string(p.algorithm) << ',' << p.basis_size << ',' << p.sample_count << ','
       << p.counters.sim_steps << ',' << p.counters.basis_evals << ',' << p.counters.flops << ','
       << round_trip(p.train_seconds) << '\n';
  os << "\nalgorithm,flops_vs_k,flops_vs_m\n";
  for (const auto& e : report.exponents)
    os << to_string(e.algorithm) << ',' << round_trip(e.flops_vs_k) << ','
       << round_trip(e.flops_vs_m) << '\n';
  if (!os) throw std::runtime_error("write_cost_report: write failed for " + file.string());
}

}  // namespace optstop
