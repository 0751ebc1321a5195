#include <doctest.h>

#include <random>
#include <vector>

#include "pointcopy/model/model.hpp"
#include "pointcopy/numerics/kernels.hpp"
#include "pointcopy/numerics/rowops.hpp"

using namespace pointcopy;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

double dot_ref(const std::vector<double>& a, const std::vector<double>& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
  return static_cast<double>(s);
}

struct RestoreTable {
  const kernels::KernelTable& saved = kernels::active();
  ~RestoreTable() { kernels::use_table(saved); }
};

}  // namespace

TEST_CASE("scalar table is always available and listed first") {
  const auto tables = kernels::available_tables();
  REQUIRE(!tables.empty());
  CHECK(tables.front() == &kernels::scalar_table());
}

TEST_CASE("every backend matches the scalar kernels") {
  std::mt19937_64 rng(11);
  const auto& ref = kernels::scalar_table();
  for (const auto* t : kernels::available_tables()) {
    CAPTURE(t->name);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 17u, 33u, 64u, 100u, 257u}) {
      CAPTURE(n);
      const auto a = random_vec(rng, n);
      const auto b = random_vec(rng, n);
      const double want = dot_ref(a, b);
      CHECK(t->dot(a.data(), b.data(), n) == doctest::Approx(want).epsilon(1e-13));
      CHECK(ref.dot(a.data(), b.data(), n) == doctest::Approx(want).epsilon(1e-13));

      auto y1 = random_vec(rng, n);
      auto y2 = y1;
      t->axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));
    }
    for (std::size_t k : {1u, 5u, 24u, 64u}) {
      for (std::size_t n : {1u, 7u, 16u, 17u, 39u, 64u, 256u}) {
        const auto x = random_vec(rng, k);
        const auto w = random_vec(rng, k * n);
        auto y1 = random_vec(rng, n);
        auto y2 = y1;
        t->gemv_row(x.data(), w.data(), y1.data(), k, n);
        ref.gemv_row(x.data(), w.data(), y2.data(), k, n);
        for (std::size_t j = 0; j < n; ++j) CHECK(y1[j] == doctest::Approx(y2[j]).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("model forward agrees across backends") {
  RestoreTable restore;
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.dim = 32;
  cfg.heads = 4;
  Model model(cfg, 5);
  PatchSet patches;
  patches.grid = GridGeometry{3, 3, 16};
  patches.vectors = Tensor2(9, kPatchFeatures);
  std::mt19937_64 rng(3);
  for (double& v : patches.vectors.flat()) v = std::normal_distribution<double>(0, 1)(rng);
  const std::vector<TokenId> prompt{2, 5, 9, 18, 4};
  const auto seq = image_then_prompt(9, prompt);

  kernels::use_table(kernels::scalar_table());
  const HiddenStates ref = forward(model, seq, patches);
  for (const auto* t : kernels::available_tables()) {
    CAPTURE(t->name);
    kernels::use_table(*t);
    const HiddenStates hs = forward(model, seq, patches);
    auto a = hs.final.flat();
    auto b = ref.final.flat();
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    CHECK(worst < 1e-11);
  }
}

TEST_CASE("softmax row kernel") {
  std::vector<double> y(2);
  rowops::softmax(std::vector<double>{0.0, 0.0}, y);
  CHECK(y[0] == 0.5);
  CHECK(y[1] == 0.5);
  rowops::softmax(std::vector<double>{1000.0, 1000.0}, y);
  CHECK(y[0] == 0.5);
  CHECK(y[1] == 0.5);

  std::vector<double> z(3);
  rowops::softmax(std::vector<double>{1.0, 2.0, 3.0}, z);
  const double s = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(z[i] - std::exp(i + 1.0) / s) < 1e-12);
}
