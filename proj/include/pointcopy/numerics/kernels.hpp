#pragma once

// Inner-loop kernels for dense f64 arithmetic.
//
// Every kernel has a portable scalar reference and, where the target supports
// it, an AVX2+FMA or NEON variant. The variant is picked once at first use
// (CPU feature probe) and can be forced with POINTCOPY_KERNELS=scalar|avx2|neon.
// Variants agree with the scalar reference to rounding; within one process
// all callers see the same table, so results are reproducible run to run.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace pointcopy::kernels {

enum class Backend { kScalar, kAvx2, kNeon };

struct KernelTable {
  Backend backend;
  std::string_view name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[j] += sum_p x[p] * w[p * n + j]  for j < n, p < k
  void (*gemv_row)(const double* x, const double* w, double* y, std::size_t k, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// All tables usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

// Table selected for this process.
const KernelTable& active();
// Replaces the active table; not thread-safe, meant for tests and benchmarks.
void use_table(const KernelTable& table);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace pointcopy::kernels
