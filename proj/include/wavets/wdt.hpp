#pragma once

// Wavelet Derivative Transform: a plain DWT whose detail bands are rescaled
// by the derivative gain (-1)^n 2^(n k), with k the scale index of the band.

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "wavets/wavelet.hpp"

namespace wavets {

// (-1)^n * 2^(n*k), exact in binary floating point.
double derivative_gain(unsigned order, unsigned scale);

// Cascade level l (1 = finest band) sits at scale index k = K - l + 1.
constexpr unsigned scale_index(std::size_t levels, std::size_t level) {
  return static_cast<unsigned>(levels - level + 1);
}

struct DerivativePyramid {
  unsigned order = 0;
  WaveletPyramid base;        // LH_l already multiplied by gains[l-1]; LL_K untouched
  std::vector<double> gains;  // g_1 ... g_K

  void validate() const;
};

// Pyramid with the band lengths and gains of an order-n, K-level transform of
// a length-`length` signal, all coefficients zero.
DerivativePyramid zero_derivative_pyramid(std::size_t length, std::size_t levels, unsigned order);

DerivativePyramid wdt_forward(std::span<const double> signal, const FilterBank& fb,
                              std::size_t levels, unsigned order);
std::vector<double> wdt_inverse(const DerivativePyramid& pyramid, const FilterBank& fb);

struct BandEnergy {
  std::string band;
  double unscaled = 0.0;  // ||coefficients / gain||^2
  double scaled = 0.0;    // ||coefficients||^2
};

struct EnergyReport {
  double signal_energy = 0.0;
  double coeff_energy_unscaled = 0.0;
  double coeff_energy_scaled = 0.0;
  std::vector<BandEnergy> per_band;  // LL_K, LH_K, ..., LH_1
};

EnergyReport energy_report(std::span<const double> signal, const DerivativePyramid& pyramid);

// One row per band in the order LL_K, LH_K, ..., LH_1, each step-repeated to
// the signal length and divided by the global max |coefficient|.
struct Scalogram {
  std::vector<std::string> bands;
  std::size_t length = 0;
  std::vector<std::vector<double>> rows;
};

Scalogram scalogram(const DerivativePyramid& pyramid);

// max|WDT detail| / max|DWT detail| per cascade level l = 1..K; nullopt where
// the plain detail band is identically zero.
std::vector<std::optional<double>> change_amplification(std::span<const double> signal,
                                                        const FilterBank& fb, std::size_t levels,
                                                        unsigned order);

std::string band_label(const DerivativePyramid& pyramid, std::size_t row);

// CSV with header `band,index,value,gain`, rows LL_K first then LH_K ... LH_1.
void write_coefficients_csv(std::ostream& out, const DerivativePyramid& pyramid);
// CSV with header `band,t0,...,t{T-1}`, one row per band in scalogram order.
void write_scalogram_csv(std::ostream& out, const Scalogram& grid);

}  // namespace wavets
