#include "wavets/wavelet.hpp"

#include "wavets/error.hpp"
#include "wavets/kernels.hpp"

namespace wavets {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;  // 1/sqrt(2), correctly rounded

simd::TwoTap analysis_taps(const FilterBank& fb) {
  return {fb.dec_lo[0], fb.dec_lo[1], fb.dec_hi[0], fb.dec_hi[1]};
}

simd::TwoTap synthesis_taps(const FilterBank& fb) {
  return {fb.rec_lo[0], fb.rec_lo[1], fb.rec_hi[0], fb.rec_hi[1]};
}

}  // namespace

FilterBank make_filterbank(std::string_view name) {
  if (name != "db1" && name != "bior1.1" && name != "rbio1.1")
    throw UnknownWaveletError(std::string(name));
  return FilterBank{
      std::string(name),
      {kInvSqrt2, kInvSqrt2},
      {kInvSqrt2, -kInvSqrt2},
      {kInvSqrt2, kInvSqrt2},
      {kInvSqrt2, -kInvSqrt2},
  };
}

FilterBank synthesis_adjoint(const FilterBank& fb) {
  return FilterBank{fb.name + "^T", fb.rec_lo, fb.rec_hi, fb.dec_lo, fb.dec_hi};
}

DwtLevel dwt_level(std::span<const double> signal, const FilterBank& fb) {
  if (signal.size() < 2 || signal.size() % 2 != 0) throw OddLengthError(signal.size());
  const std::size_t half = signal.size() / 2;
  DwtLevel out{std::vector<double>(half), std::vector<double>(half)};
  simd::active().analysis_step(signal.data(), half, analysis_taps(fb), out.approx.data(),
                               out.detail.data());
  return out;
}

std::vector<double> idwt_level(std::span<const double> approx, std::span<const double> detail,
                               const FilterBank& fb) {
  if (approx.size() != detail.size())
    throw LengthMismatchError("approx length " + std::to_string(approx.size()) +
                              " != detail length " + std::to_string(detail.size()));
  std::vector<double> out(2 * approx.size());
  simd::active().synthesis_step(approx.data(), detail.data(), approx.size(), synthesis_taps(fb),
                                out.data());
  return out;
}

void WaveletPyramid::validate() const {
  if (levels == 0) throw InconsistentPyramidError("pyramid has zero levels");
  if (details.size() != levels)
    throw InconsistentPyramidError("pyramid has " + std::to_string(details.size()) +
                                   " detail bands for " + std::to_string(levels) + " levels");
  if (original_length == 0 || original_length % (std::size_t{1} << levels) != 0)
    throw InconsistentPyramidError("original length " + std::to_string(original_length) +
                                   " is not divisible by 2^" + std::to_string(levels));
  for (std::size_t l = 1; l <= levels; ++l) {
    const std::size_t want = original_length >> l;
    if (details[l - 1].size() != want)
      throw InconsistentPyramidError("LH_" + std::to_string(l) + " has length " +
                                     std::to_string(details[l - 1].size()) + ", expected " +
                                     std::to_string(want));
  }
  if (approx.size() != (original_length >> levels))
    throw InconsistentPyramidError("LL_" + std::to_string(levels) + " has length " +
                                   std::to_string(approx.size()) + ", expected " +
                                   std::to_string(original_length >> levels));
}

WaveletPyramid zero_pyramid(std::size_t length, std::size_t levels) {
  WaveletPyramid p;
  p.levels = levels;
  p.original_length = length;
  p.approx.assign(length >> levels, 0.0);
  for (std::size_t l = 1; l <= levels; ++l) p.details.emplace_back(length >> l, 0.0);
  p.validate();
  return p;
}

WaveletPyramid dwt_multi(std::span<const double> signal, const FilterBank& fb,
                         std::size_t levels) {
  if (levels == 0) throw ValidationError("decomposition needs at least one level");
  std::size_t length = signal.size();
  for (std::size_t l = 1; l <= levels; ++l) {
    if (length < 2 || length % 2 != 0) throw DivisibilityError(signal.size(), l);
    length /= 2;
  }

  WaveletPyramid p;
  p.levels = levels;
  p.original_length = signal.size();
  p.details.reserve(levels);
  std::vector<double> running(signal.begin(), signal.end());
  for (std::size_t l = 1; l <= levels; ++l) {
    DwtLevel step = dwt_level(running, fb);
    p.details.push_back(std::move(step.detail));
    running = std::move(step.approx);
  }
  p.approx = std::move(running);
  return p;
}

std::vector<double> idwt_multi(const WaveletPyramid& pyramid, const FilterBank& fb) {
  pyramid.validate();
  std::vector<double> running = pyramid.approx;
  for (std::size_t l = pyramid.levels; l >= 1; --l)
    running = idwt_level(running, pyramid.details[l - 1], fb);
  return running;
}

}  // namespace wavets
