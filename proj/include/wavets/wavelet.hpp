#pragma once

// Orthonormal two-tap discrete wavelet analysis and synthesis.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wavets {

// Analysis: approx[j] = dec_lo . (x[2j], x[2j+1]), detail[j] = dec_hi . (x[2j], x[2j+1]).
// Synthesis: x[2j+i] = rec_lo[i]*approx[j] + rec_hi[i]*detail[j].
struct FilterBank {
  std::string name;
  std::array<double, 2> dec_lo;
  std::array<double, 2> dec_hi;
  std::array<double, 2> rec_lo;
  std::array<double, 2> rec_hi;
};

// db1, bior1.1 and rbio1.1 (the three share the Haar coefficients). The
// high-pass sign is fixed so that detail = (even - odd) / sqrt(2).
FilterBank make_filterbank(std::string_view name);

// Bank whose analysis step is the transpose of `fb`'s synthesis step.
// For orthonormal banks this is `fb` itself.
FilterBank synthesis_adjoint(const FilterBank& fb);

struct DwtLevel {
  std::vector<double> approx;
  std::vector<double> detail;
};

DwtLevel dwt_level(std::span<const double> signal, const FilterBank& fb);
std::vector<double> idwt_level(std::span<const double> approx, std::span<const double> detail,
                               const FilterBank& fb);

struct WaveletPyramid {
  std::size_t levels = 0;
  std::size_t original_length = 0;
  std::vector<double> approx;                // LL_K, length T / 2^K
  std::vector<std::vector<double>> details;  // LH_1 (finest, length T/2) ... LH_K

  // Throws InconsistentPyramidError if any length invariant fails.
  void validate() const;
};

// Zero pyramid with the band lengths of a length-`length`, `levels`-deep cascade.
WaveletPyramid zero_pyramid(std::size_t length, std::size_t levels);

WaveletPyramid dwt_multi(std::span<const double> signal, const FilterBank& fb, std::size_t levels);
std::vector<double> idwt_multi(const WaveletPyramid& pyramid, const FilterBank& fb);

}  // namespace wavets
