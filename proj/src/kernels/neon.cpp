#include <arm_neon.h>

#include <algorithm>
#include <cmath>

#include "kernel_tables.hpp"

namespace wavets::simd::detail {
namespace {

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(a, vld1q_f64(x + i))));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_neon(double alpha, double* x, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(x + i, vmulq_f64(vld1q_f64(x + i), a));
  for (; i < n; ++i) x[i] *= alpha;
}

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    acc1 = vaddq_f64(acc1, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_squares_neon(const double* x, std::size_t n) { return dot_neon(x, x, n); }

double squared_distance_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i));
    acc = vaddq_f64(acc, vmulq_f64(d, d));
  }
  double total = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    total += d * d;
  }
  return total;
}

void analysis_step_neon(const double* x, std::size_t half, TwoTap t, double* approx,
                        double* detail) {
  std::size_t j = 0;
  for (; j + 2 <= half; j += 2) {
    const float64x2x2_t pairs = vld2q_f64(x + 2 * j);  // val[0] evens, val[1] odds
    vst1q_f64(approx + j, vaddq_f64(vmulq_n_f64(pairs.val[0], t.lo0), vmulq_n_f64(pairs.val[1], t.lo1)));
    vst1q_f64(detail + j, vaddq_f64(vmulq_n_f64(pairs.val[0], t.hi0), vmulq_n_f64(pairs.val[1], t.hi1)));
  }
  for (; j < half; ++j) {
    const double e = x[2 * j];
    const double o = x[2 * j + 1];
    approx[j] = t.lo0 * e + t.lo1 * o;
    detail[j] = t.hi0 * e + t.hi1 * o;
  }
}

void synthesis_step_neon(const double* approx, const double* detail, std::size_t half, TwoTap t,
                         double* out) {
  std::size_t j = 0;
  for (; j + 2 <= half; j += 2) {
    const float64x2_t a = vld1q_f64(approx + j);
    const float64x2_t d = vld1q_f64(detail + j);
    float64x2x2_t pairs;
    pairs.val[0] = vaddq_f64(vmulq_n_f64(a, t.lo0), vmulq_n_f64(d, t.hi0));
    pairs.val[1] = vaddq_f64(vmulq_n_f64(a, t.lo1), vmulq_n_f64(d, t.hi1));
    vst2q_f64(out + 2 * j, pairs);
  }
  for (; j < half; ++j) {
    out[2 * j] = t.lo0 * approx[j] + t.hi0 * detail[j];
    out[2 * j + 1] = t.lo1 * approx[j] + t.hi1 * detail[j];
  }
}

void adam_update_neon(double* param, const double* grad, double* m, double* v, std::size_t n,
                      const AdamCoeffs& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t g = vld1q_f64(grad + i);
    const float64x2_t mi = vaddq_f64(vmulq_n_f64(vld1q_f64(m + i), c.beta1), vmulq_n_f64(g, one_minus_b1));
    const float64x2_t vi =
        vaddq_f64(vmulq_n_f64(vld1q_f64(v + i), c.beta2), vmulq_n_f64(vmulq_f64(g, g), one_minus_b2));
    vst1q_f64(m + i, mi);
    vst1q_f64(v + i, vi);
    const float64x2_t m_hat = vdivq_f64(mi, vdupq_n_f64(c.bias_correction1));
    const float64x2_t v_hat = vdivq_f64(vi, vdupq_n_f64(c.bias_correction2));
    const float64x2_t step = vdivq_f64(vmulq_n_f64(m_hat, c.learning_rate),
                                       vaddq_f64(vsqrtq_f64(v_hat), vdupq_n_f64(c.epsilon)));
    vst1q_f64(param + i, vsubq_f64(vld1q_f64(param + i), step));
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

// Rows x (2 Vecs) tile of C over the depth range [p0, p1).
template <int Rows, int Vecs>
inline void gemm_tile(std::size_t p0, std::size_t p1, const double* a, std::size_t lda,
                      const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  float64x2_t acc[Rows][Vecs];
  for (int r = 0; r < Rows; ++r)
    for (int v = 0; v < Vecs; ++v) acc[r][v] = vld1q_f64(c + r * ldc + 2 * v);
  for (std::size_t p = p0; p < p1; ++p) {
    float64x2_t bv[Vecs];
    for (int v = 0; v < Vecs; ++v) bv[v] = vld1q_f64(b + p * ldb + 2 * v);
    for (int r = 0; r < Rows; ++r) {
      const float64x2_t av = vdupq_n_f64(a[r * lda + p]);
      for (int v = 0; v < Vecs; ++v) acc[r][v] = vfmaq_f64(acc[r][v], av, bv[v]);
    }
  }
  for (int r = 0; r < Rows; ++r)
    for (int v = 0; v < Vecs; ++v) vst1q_f64(c + r * ldc + 2 * v, acc[r][v]);
}

template <int Vecs>
inline void gemm_columns(std::size_t m, std::size_t p0, std::size_t p1, const double* a,
                         std::size_t lda, const double* b, std::size_t ldb, double* c,
                         std::size_t ldc) {
  std::size_t r = 0;
  for (; r + 4 <= m; r += 4) gemm_tile<4, Vecs>(p0, p1, a + r * lda, lda, b, ldb, c + r * ldc, ldc);
  for (; r < m; ++r) gemm_tile<1, Vecs>(p0, p1, a + r * lda, lda, b, ldb, c + r * ldc, ldc);
}

void gemm_acc_neon(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                   const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  constexpr std::size_t depth = 256;
  for (std::size_t p0 = 0; p0 < k; p0 += depth) {
    const std::size_t p1 = std::min(k, p0 + depth);
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) gemm_columns<4>(m, p0, p1, a, lda, b + j, ldb, c + j, ldc);
    for (; j + 2 <= n; j += 2) gemm_columns<1>(m, p0, p1, a, lda, b + j, ldb, c + j, ldc);
    for (; j < n; ++j)
      for (std::size_t r = 0; r < m; ++r) {
        double acc = c[r * ldc + j];
        for (std::size_t p = p0; p < p1; ++p) acc = std::fma(a[r * lda + p], b[p * ldb + j], acc);
        c[r * ldc + j] = acc;
      }
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{
      Isa::Neon,         axpy_neon,          scale_neon,          dot_neon,
      sum_squares_neon,  squared_distance_neon, analysis_step_neon, synthesis_step_neon,
      adam_update_neon,  gemm_acc_neon,
  };
  return table;
}

}  // namespace wavets::simd::detail
