// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

namespace optstop::testing {

inline double mean(const std::vector<double>& values) {
  return std::accumulate(values.begin(), values.end(), 0.0) / values.size();
}

inline double sample_variance(const std::vector<double>& values) {
  const double m = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return acc / (values.size() - 1);
}

inline double standard_error(const std::vector<double>& values) {
  return std::sqrt(sample_variance(values) / values.size());
}

inline std::filesystem::path fixture_path(const std::string& name) {
  const char* dir = std::getenv("OPTSTOP_FIXTURES");
  return std::filesystem::path(dir ? dir : "tests/fixtures") / name;
}

// chi-square critical values at the 0.99 level (test passes while the
// statistic stays below them, i.e. p > 0.01)
inline constexpr double kChiSq99Dof99 = 134.642;

}  // namespace optstop::testing
