#pragma once

#include "wavets/kernels.hpp"

namespace wavets::simd::detail {

#if defined(WAVETS_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(WAVETS_HAVE_NEON)
const KernelTable& neon_table();
#endif

}  // namespace wavets::simd::detail
