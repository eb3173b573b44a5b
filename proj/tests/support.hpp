#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wavets/matrix.hpp"

namespace testing {

inline double uniform(std::mt19937_64& gen, double lo = -1.0, double hi = 1.0) {
  const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * uniform(gen);
  return v;
}

inline wavets::Matrix random_matrix(std::mt19937_64& gen, std::size_t r, std::size_t c,
                                    double scale = 1.0) {
  wavets::Matrix m(r, c);
  for (double& x : m.values) x = scale * uniform(gen);
  return m;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double sum_sq(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("wavets_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string source_path(const std::string& rel) {
  return std::string(WAVETS_SOURCE_DIR) + "/" + rel;
}

}  // namespace testing
