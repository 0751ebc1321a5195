// AArch64 only: NEON is architecturally guaranteed there.
#include <arm_neon.h>

#include "pointcopy/numerics/kernels.hpp"

namespace pointcopy::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_row_neon(const double* x, const double* w, double* y, std::size_t k, std::size_t n) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    float64x2_t y0 = vld1q_f64(y + j);
    float64x2_t y1 = vld1q_f64(y + j + 2);
    float64x2_t y2 = vld1q_f64(y + j + 4);
    float64x2_t y3 = vld1q_f64(y + j + 6);
    for (std::size_t p = 0; p < k; ++p) {
      const float64x2_t xp = vdupq_n_f64(x[p]);
      const double* wp = w + p * n + j;
      y0 = vfmaq_f64(y0, xp, vld1q_f64(wp));
      y1 = vfmaq_f64(y1, xp, vld1q_f64(wp + 2));
      y2 = vfmaq_f64(y2, xp, vld1q_f64(wp + 4));
      y3 = vfmaq_f64(y3, xp, vld1q_f64(wp + 6));
    }
    vst1q_f64(y + j, y0);
    vst1q_f64(y + j + 2, y1);
    vst1q_f64(y + j + 4, y2);
    vst1q_f64(y + j + 6, y3);
  }
  for (; j < n; ++j) {
    double acc = y[j];
    for (std::size_t p = 0; p < k; ++p) acc += x[p] * w[p * n + j];
    y[j] = acc;
  }
}

}  // namespace

const KernelTable* neon_table() {
  static const KernelTable table{Backend::kNeon, "neon", &dot_neon, &axpy_neon, &gemv_row_neon};
  return &table;
}

}  // namespace pointcopy::kernels
