#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "wavets/matrix.hpp"

namespace wavets {

double mse(const Matrix& truth, const Matrix& pred);
double mae(const Matrix& truth, const Matrix& pred);

// (200/H) sum |x - x^| / (|x| + |x^|); 0/0 terms count as 0.
double smape(std::span<const double> truth, std::span<const double> pred);

// Mean |error| over the in-window seasonal-difference scale
// (1/(H-m)) sum_{j>m} |x_j - x_{j-m}|. nullopt when that scale is zero.
std::optional<double> mase(std::span<const double> truth, std::span<const double> pred,
                           std::size_t period);

// 0.5 * (smape / smape_ref + mase / mase_ref).
double owa(double smape_model, double mase_model, double smape_ref, double mase_ref);

// Copies the last row tau times.
Matrix naive_repeat_last(const Matrix& window, std::size_t horizon);
// Repeats the last `period` rows forward; period 1 is repeat-last.
Matrix naive_seasonal(const Matrix& window, std::size_t horizon, std::size_t period);

struct MetricsReport {
  double mse = 0.0;
  double mae = 0.0;
  std::optional<double> smape;
  std::optional<double> mase;
  std::optional<double> owa;
  std::size_t horizon = 0;
  std::size_t channels = 0;
  std::optional<std::size_t> period;
  std::size_t windows = 0;
  std::size_t mase_skipped = 0;  // series whose MASE scale was zero

  // Flat JSON object, keys sorted.
  std::string to_json() const;
};

}  // namespace wavets
