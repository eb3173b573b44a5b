#pragma once

// Inner-loop kernels with a scalar reference implementation and SIMD
// variants chosen at runtime. Elementwise kernels (axpy, scale, the Haar
// steps, adam_update) and gemm_acc produce bit-identical results on every
// ISA; reductions (dot, sum_squares, squared_distance) differ only in
// summation order.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace wavets::simd {

enum class Isa { Scalar, Avx2, Neon };

struct AdamCoeffs {
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

// Two-tap filter pair for one analysis or synthesis step.
struct TwoTap {
  double lo0, lo1, hi0, hi1;
};

struct KernelTable {
  Isa isa;
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x[i] *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
  double (*squared_distance)(const double* x, const double* y, std::size_t n);
  // approx[j] = lo0*x[2j] + lo1*x[2j+1], detail[j] = hi0*x[2j] + hi1*x[2j+1]
  void (*analysis_step)(const double* x, std::size_t half, TwoTap taps, double* approx,
                        double* detail);
  // out[2j+i] = lo_i*approx[j] + hi_i*detail[j]
  void (*synthesis_step)(const double* approx, const double* detail, std::size_t half, TwoTap taps,
                         double* out);
  void (*adam_update)(double* param, const double* grad, double* m, double* v, std::size_t n,
                      const AdamCoeffs& c);
  // C (m x n) += A (m x k) B (k x n), row-major with leading dimensions.
  // Each C[r][j] becomes fma(a[r][p], b[p][j], C[r][j]) for p = 0 .. k-1 in
  // turn; the single rounding per step is what makes every ISA agree.
  void (*gemm_acc)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                   const double* b, std::size_t ldb, double* c, std::size_t ldc);
};

const KernelTable& scalar_table();
bool supported(Isa isa);
// Throws ValidationError when the ISA is not built or not supported by the CPU.
const KernelTable& table(Isa isa);

// The table every library routine uses. Chosen once from the CPU; the
// WAVETS_SIMD environment variable (scalar|avx2|neon) overrides the choice.
const KernelTable& active();
void select(Isa isa);
std::vector<Isa> available();
std::string_view name(Isa isa);

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void scale(double alpha, std::span<double> x) { active().scale(alpha, x.data(), x.size()); }
inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}
inline double sum_squares(std::span<const double> x) {
  return active().sum_squares(x.data(), x.size());
}
inline double squared_distance(std::span<const double> x, std::span<const double> y) {
  return active().squared_distance(x.data(), y.data(), x.size());
}

}  // namespace wavets::simd
