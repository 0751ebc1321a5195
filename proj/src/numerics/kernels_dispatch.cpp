#include <cstdlib>
#include <string>

#include <spdlog/spdlog.h>

#include "pointcopy/numerics/kernels.hpp"

namespace pointcopy::kernels {

#if !defined(POINTCOPY_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif
#if !defined(POINTCOPY_HAVE_NEON)
const KernelTable* neon_table() { return nullptr; }
#endif

std::vector<const KernelTable*> available_tables() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const auto* t = avx2_table()) out.push_back(t);
  if (const auto* t = neon_table()) out.push_back(t);
  return out;
}

namespace {

const KernelTable& select_table() {
  const char* env = std::getenv("POINTCOPY_KERNELS");
  const std::string want = env ? env : "auto";
  if (want == "scalar") return scalar_table();
  if (want == "avx2" || want == "auto") {
    if (const auto* t = avx2_table()) return *t;
  }
  if (want == "neon" || want == "auto") {
    if (const auto* t = neon_table()) return *t;
  }
  if (want != "auto") {
    spdlog::warn("POINTCOPY_KERNELS={} unavailable on this machine, using scalar", want);
  }
  return scalar_table();
}

}  // namespace

namespace {
const KernelTable*& current() {
  static const KernelTable* table = &select_table();
  return table;
}
}  // namespace

const KernelTable& active() { return *current(); }

void use_table(const KernelTable& table) { current() = &table; }

}  // namespace pointcopy::kernels
