#include "pointcopy/numerics/kernels.hpp"

namespace pointcopy::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_row_scalar(const double* x, const double* w, double* y, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double xp = x[p];
    const double* wp = w + p * n;
    for (std::size_t j = 0; j < n; ++j) y[j] += xp * wp[j];
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Backend::kScalar, "scalar", &dot_scalar, &axpy_scalar,
                                 &gemv_row_scalar};
  return table;
}

}  // namespace pointcopy::kernels
