#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "kernel_tables.hpp"

namespace wavets::simd::detail {
namespace {

inline double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(a, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_avx2(double alpha, double* x, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), a));
  for (; i < n; ++i) x[i] *= alpha;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  double acc = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_squares_avx2(const double* x, std::size_t n) { return dot_avx2(x, x, n); }

double squared_distance_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  double total = horizontal_sum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    total += d * d;
  }
  return total;
}

void analysis_step_avx2(const double* x, std::size_t half, TwoTap t, double* approx,
                        double* detail) {
  const __m256d lo0 = _mm256_set1_pd(t.lo0), lo1 = _mm256_set1_pd(t.lo1);
  const __m256d hi0 = _mm256_set1_pd(t.hi0), hi1 = _mm256_set1_pd(t.hi1);
  std::size_t j = 0;
  for (; j + 4 <= half; j += 4) {
    const __m256d v0 = _mm256_loadu_pd(x + 2 * j);      // x0 x1 x2 x3
    const __m256d v1 = _mm256_loadu_pd(x + 2 * j + 4);  // x4 x5 x6 x7
    // unpack gives x0 x4 x2 x6 / x1 x5 x3 x7; reorder lanes to 0 2 1 3
    const __m256d even = _mm256_permute4x64_pd(_mm256_unpacklo_pd(v0, v1), 0xD8);
    const __m256d odd = _mm256_permute4x64_pd(_mm256_unpackhi_pd(v0, v1), 0xD8);
    _mm256_storeu_pd(approx + j,
                     _mm256_add_pd(_mm256_mul_pd(lo0, even), _mm256_mul_pd(lo1, odd)));
    _mm256_storeu_pd(detail + j,
                     _mm256_add_pd(_mm256_mul_pd(hi0, even), _mm256_mul_pd(hi1, odd)));
  }
  for (; j < half; ++j) {
    const double e = x[2 * j];
    const double o = x[2 * j + 1];
    approx[j] = t.lo0 * e + t.lo1 * o;
    detail[j] = t.hi0 * e + t.hi1 * o;
  }
}

void synthesis_step_avx2(const double* approx, const double* detail, std::size_t half, TwoTap t,
                         double* out) {
  const __m256d lo0 = _mm256_set1_pd(t.lo0), lo1 = _mm256_set1_pd(t.lo1);
  const __m256d hi0 = _mm256_set1_pd(t.hi0), hi1 = _mm256_set1_pd(t.hi1);
  std::size_t j = 0;
  for (; j + 4 <= half; j += 4) {
    const __m256d a = _mm256_loadu_pd(approx + j);
    const __m256d d = _mm256_loadu_pd(detail + j);
    const __m256d even = _mm256_add_pd(_mm256_mul_pd(lo0, a), _mm256_mul_pd(hi0, d));
    const __m256d odd = _mm256_add_pd(_mm256_mul_pd(lo1, a), _mm256_mul_pd(hi1, d));
    const __m256d e = _mm256_permute4x64_pd(even, 0xD8);  // e0 e2 e1 e3
    const __m256d o = _mm256_permute4x64_pd(odd, 0xD8);
    _mm256_storeu_pd(out + 2 * j, _mm256_unpacklo_pd(e, o));      // e0 o0 e1 o1
    _mm256_storeu_pd(out + 2 * j + 4, _mm256_unpackhi_pd(e, o));  // e2 o2 e3 o3
  }
  for (; j < half; ++j) {
    out[2 * j] = t.lo0 * approx[j] + t.hi0 * detail[j];
    out[2 * j + 1] = t.lo1 * approx[j] + t.hi1 * detail[j];
  }
}

void adam_update_avx2(double* param, const double* grad, double* m, double* v, std::size_t n,
                      const AdamCoeffs& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  const __m256d b1 = _mm256_set1_pd(c.beta1), b2 = _mm256_set1_pd(c.beta2);
  const __m256d nb1 = _mm256_set1_pd(one_minus_b1), nb2 = _mm256_set1_pd(one_minus_b2);
  const __m256d bc1 = _mm256_set1_pd(c.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(c.bias_correction2);
  const __m256d lr = _mm256_set1_pd(c.learning_rate), eps = _mm256_set1_pd(c.epsilon);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(nb1, g));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(nb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d m_hat = _mm256_div_pd(mi, bc1);
    const __m256d v_hat = _mm256_div_pd(vi, bc2);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + one_minus_b1 * g;
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
    const double m_hat = m[i] / c.bias_correction1;
    const double v_hat = v[i] / c.bias_correction2;
    param[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

// 4 x 8 tile of C over the depth range [p0, p1), accumulators in registers.
void gemm_tile_4x8(std::size_t p0, std::size_t p1, const double* a, std::size_t lda,
                   const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  double* c0 = c;
  double* c1 = c + ldc;
  double* c2 = c + 2 * ldc;
  double* c3 = c + 3 * ldc;
  __m256d s00 = _mm256_loadu_pd(c0), s01 = _mm256_loadu_pd(c0 + 4);
  __m256d s10 = _mm256_loadu_pd(c1), s11 = _mm256_loadu_pd(c1 + 4);
  __m256d s20 = _mm256_loadu_pd(c2), s21 = _mm256_loadu_pd(c2 + 4);
  __m256d s30 = _mm256_loadu_pd(c3), s31 = _mm256_loadu_pd(c3 + 4);
  const double* a0 = a;
  const double* a1 = a + lda;
  const double* a2 = a + 2 * lda;
  const double* a3 = a + 3 * lda;
  for (std::size_t p = p0; p < p1; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b + p * ldb);
    const __m256d b1 = _mm256_loadu_pd(b + p * ldb + 4);
    __m256d av = _mm256_broadcast_sd(a0 + p);
    s00 = _mm256_fmadd_pd(av, b0, s00);
    s01 = _mm256_fmadd_pd(av, b1, s01);
    av = _mm256_broadcast_sd(a1 + p);
    s10 = _mm256_fmadd_pd(av, b0, s10);
    s11 = _mm256_fmadd_pd(av, b1, s11);
    av = _mm256_broadcast_sd(a2 + p);
    s20 = _mm256_fmadd_pd(av, b0, s20);
    s21 = _mm256_fmadd_pd(av, b1, s21);
    av = _mm256_broadcast_sd(a3 + p);
    s30 = _mm256_fmadd_pd(av, b0, s30);
    s31 = _mm256_fmadd_pd(av, b1, s31);
  }
  _mm256_storeu_pd(c0, s00);
  _mm256_storeu_pd(c0 + 4, s01);
  _mm256_storeu_pd(c1, s10);
  _mm256_storeu_pd(c1 + 4, s11);
  _mm256_storeu_pd(c2, s20);
  _mm256_storeu_pd(c2 + 4, s21);
  _mm256_storeu_pd(c3, s30);
  _mm256_storeu_pd(c3 + 4, s31);
}

// One row by 4 columns of C.
void gemm_tile_1x4(std::size_t p0, std::size_t p1, const double* a, const double* b,
                   std::size_t ldb, double* c) {
  __m256d s = _mm256_loadu_pd(c);
  for (std::size_t p = p0; p < p1; ++p)
    s = _mm256_fmadd_pd(_mm256_broadcast_sd(a + p), _mm256_loadu_pd(b + p * ldb), s);
  _mm256_storeu_pd(c, s);
}

void gemm_acc_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                   const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  // Depth blocks keep a strip of B in cache; C is revisited in p order, so
  // every element still accumulates p = 0 .. k-1 in sequence.
  constexpr std::size_t depth = 256;
  for (std::size_t p0 = 0; p0 < k; p0 += depth) {
    const std::size_t p1 = std::min(k, p0 + depth);
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      std::size_t r = 0;
      for (; r + 4 <= m; r += 4)
        gemm_tile_4x8(p0, p1, a + r * lda, lda, b + j, ldb, c + r * ldc + j, ldc);
      for (; r < m; ++r) {
        gemm_tile_1x4(p0, p1, a + r * lda, b + j, ldb, c + r * ldc + j);
        gemm_tile_1x4(p0, p1, a + r * lda, b + j + 4, ldb, c + r * ldc + j + 4);
      }
    }
    for (; j + 4 <= n; j += 4)
      for (std::size_t r = 0; r < m; ++r)
        gemm_tile_1x4(p0, p1, a + r * lda, b + j, ldb, c + r * ldc + j);
    for (; j < n; ++j)
      for (std::size_t r = 0; r < m; ++r) {
        double acc = c[r * ldc + j];
        for (std::size_t p = p0; p < p1; ++p) acc = std::fma(a[r * lda + p], b[p * ldb + j], acc);
        c[r * ldc + j] = acc;
      }
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      Isa::Avx2,         axpy_avx2,          scale_avx2,          dot_avx2,
      sum_squares_avx2,  squared_distance_avx2, analysis_step_avx2, synthesis_step_avx2,
      adam_update_avx2,  gemm_acc_avx2,
  };
  return table;
}

}  // namespace wavets::simd::detail
