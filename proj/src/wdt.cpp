#include "wavets/wdt.hpp"

#include <algorithm>
#include <cmath>

#include "wavets/error.hpp"
#include "wavets/format.hpp"
#include "wavets/kernels.hpp"

namespace wavets {
namespace {

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<double> gains_for(std::size_t levels, unsigned order) {
  std::vector<double> gains(levels);
  for (std::size_t l = 1; l <= levels; ++l)
    gains[l - 1] = derivative_gain(order, scale_index(levels, l));
  return gains;
}

// Band for scalogram/CSV row r: 0 is LL_K, r >= 1 is LH_{K-r+1}.
std::span<const double> band_row(const DerivativePyramid& p, std::size_t row) {
  if (row == 0) return p.base.approx;
  return p.base.details[p.base.levels - row];
}

double row_gain(const DerivativePyramid& p, std::size_t row) {
  return row == 0 ? 1.0 : p.gains[p.base.levels - row];
}

}  // namespace

double derivative_gain(unsigned order, unsigned scale) {
  const double sign = (order % 2 == 0) ? 1.0 : -1.0;
  return std::ldexp(sign, static_cast<int>(order * scale));
}

void DerivativePyramid::validate() const {
  base.validate();
  if (gains.size() != base.levels)
    throw InconsistentPyramidError("pyramid carries " + std::to_string(gains.size()) +
                                   " gains for " + std::to_string(base.levels) + " levels");
  for (double g : gains)
    if (g == 0.0 || !std::isfinite(g))
      throw InconsistentPyramidError("pyramid gain must be finite and nonzero");
}

DerivativePyramid zero_derivative_pyramid(std::size_t length, std::size_t levels,
                                          unsigned order) {
  return DerivativePyramid{order, zero_pyramid(length, levels), gains_for(levels, order)};
}

DerivativePyramid wdt_forward(std::span<const double> signal, const FilterBank& fb,
                              std::size_t levels, unsigned order) {
  DerivativePyramid out{order, dwt_multi(signal, fb, levels), gains_for(levels, order)};
  if (order == 0) return out;
  for (std::size_t l = 1; l <= levels; ++l) simd::scale(out.gains[l - 1], out.base.details[l - 1]);
  return out;
}

std::vector<double> wdt_inverse(const DerivativePyramid& pyramid, const FilterBank& fb) {
  pyramid.validate();
  if (pyramid.order == 0) return idwt_multi(pyramid.base, fb);
  WaveletPyramid plain = pyramid.base;
  // Gains are powers of two, so the reciprocal and the product are exact.
  for (std::size_t l = 1; l <= plain.levels; ++l)
    simd::scale(1.0 / pyramid.gains[l - 1], plain.details[l - 1]);
  return idwt_multi(plain, fb);
}

EnergyReport energy_report(std::span<const double> signal, const DerivativePyramid& pyramid) {
  pyramid.validate();
  if (pyramid.base.original_length != signal.size())
    throw LengthMismatchError("pyramid was built from a length-" +
                              std::to_string(pyramid.base.original_length) +
                              " signal, got length " + std::to_string(signal.size()));
  EnergyReport report;
  report.signal_energy = simd::sum_squares(signal);
  const std::size_t rows = pyramid.base.levels + 1;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto band = band_row(pyramid, r);
    const double g = row_gain(pyramid, r);
    BandEnergy e{band_label(pyramid, r), 0.0, simd::sum_squares(band)};
    e.unscaled = e.scaled / (g * g);
    report.coeff_energy_scaled += e.scaled;
    report.coeff_energy_unscaled += e.unscaled;
    report.per_band.push_back(std::move(e));
  }
  return report;
}

Scalogram scalogram(const DerivativePyramid& pyramid) {
  pyramid.validate();
  const std::size_t rows = pyramid.base.levels + 1;
  const std::size_t length = pyramid.base.original_length;
  double peak = 0.0;
  for (std::size_t r = 0; r < rows; ++r) peak = std::max(peak, max_abs(band_row(pyramid, r)));

  Scalogram grid;
  grid.length = length;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto band = band_row(pyramid, r);
    const std::size_t repeat = length / band.size();
    std::vector<double> row(length, 0.0);
    if (peak > 0.0)
      for (std::size_t t = 0; t < length; ++t) row[t] = std::abs(band[t / repeat]) / peak;
    grid.bands.push_back(band_label(pyramid, r));
    grid.rows.push_back(std::move(row));
  }
  return grid;
}

std::vector<std::optional<double>> change_amplification(std::span<const double> signal,
                                                        const FilterBank& fb, std::size_t levels,
                                                        unsigned order) {
  const WaveletPyramid plain = dwt_multi(signal, fb, levels);
  const DerivativePyramid derived = wdt_forward(signal, fb, levels, order);
  std::vector<std::optional<double>> ratios(levels);
  for (std::size_t l = 1; l <= levels; ++l) {
    const double base = max_abs(plain.details[l - 1]);
    if (base > 0.0) ratios[l - 1] = max_abs(derived.base.details[l - 1]) / base;
  }
  return ratios;
}

std::string band_label(const DerivativePyramid& pyramid, std::size_t row) {
  if (row == 0) return "LL_" + std::to_string(pyramid.base.levels);
  return "LH_" + std::to_string(pyramid.base.levels - row + 1);
}

void write_coefficients_csv(std::ostream& out, const DerivativePyramid& pyramid) {
  pyramid.validate();
  out << "band,index,value,gain\n";
  for (std::size_t r = 0; r <= pyramid.base.levels; ++r) {
    const auto band = band_row(pyramid, r);
    const std::string label = band_label(pyramid, r);
    const std::string gain = format_double(row_gain(pyramid, r));
    for (std::size_t j = 0; j < band.size(); ++j)
      out << label << ',' << j << ',' << format_double(band[j]) << ',' << gain << '\n';
  }
}

void write_scalogram_csv(std::ostream& out, const Scalogram& grid) {
  out << "band";
  for (std::size_t t = 0; t < grid.length; ++t) out << ",t" << t;
  out << '\n';
  for (std::size_t r = 0; r < grid.rows.size(); ++r) {
    out << grid.bands[r];
    for (double v : grid.rows[r]) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace wavets
