#include <cmath>

#include "wavets/kernels.hpp"

namespace wavets::simd {
namespace {

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double sum_squares_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

double squared_distance_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

void analysis_step_scalar(const double* x, std::size_t half, TwoTap t, double* approx,
                          double* detail) {
  for (std::size_t j = 0; j < half; ++j) {
    const double even = x[2 * j];
    const double odd = x[2 * j + 1];
    approx[j] = t.lo0 * even + t.lo1 * odd;
    detail[j] = t.hi0 * even + t.hi1 * odd;
  }
}

void synthesis_step_scalar(const double* approx, const double* detail, std::size_t half, TwoTap t,
                           double* out) {
  for (std::size_t j = 0; j < half; ++j) {
    out[2 * j] = t.lo0 * approx[j] + t.hi0 * detail[j];
    out[2 * j + 1] = t.lo1 * approx[j] + t.hi1 * detail[j];
  }
}

void adam_update_scalar(double* param, const double* grad, double* m, double* v, std::size_t n,
                        const AdamCoeffs& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + one_minus_b1 * g;
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
    const double m_hat = m[i] / c.bias_correction1;
    const double v_hat = v[i] / c.bias_correction2;
    param[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

void gemm_acc_scalar(std::size_t m, std::size_t n, std::size_t k, const double* a,
                     std::size_t lda, const double* b, std::size_t ldb, double* c,
                     std::size_t ldc) {
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t p = 0; p < k; ++p) {
      const double ap = a[r * lda + p];
      const double* bp = b + p * ldb;
      double* cr = c + r * ldc;
      for (std::size_t j = 0; j < n; ++j) cr[j] = std::fma(ap, bp[j], cr[j]);
    }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      Isa::Scalar,          axpy_scalar,          scale_scalar,          dot_scalar,
      sum_squares_scalar,   squared_distance_scalar, analysis_step_scalar, synthesis_step_scalar,
      adam_update_scalar,   gemm_acc_scalar,
  };
  return table;
}

}  // namespace wavets::simd
