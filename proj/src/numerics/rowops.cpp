#include "pointcopy/numerics/rowops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pointcopy/numerics/kernels.hpp"

namespace pointcopy::rowops {

void linear(std::span<const double> x, const Tensor2& w, const Tensor2* b, std::span<double> y) {
  if (b) {
    std::copy(b->flat().begin(), b->flat().end(), y.begin());
  } else {
    std::fill(y.begin(), y.end(), 0.0);
  }
  kernels::active().gemv_row(x.data(), w.data(), y.data(), w.rows(), w.cols());
}

NormStats layernorm(std::span<const double> x, std::span<const double> gamma,
                    std::span<const double> beta, std::span<double> y) {
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = (x[i] - mean) * rstd * gamma[i] + beta[i];
  }
  return {mean, rstd};
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_grad(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  const double t = std::tanh(u);
  const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

void softmax(std::span<const double> x, std::span<double> y) {
  if (x.empty()) return;
  const double m = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - m);
    z += y[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] /= z;
}

void attend(std::span<const double> q, const double* keys, const double* values,
            std::size_t stride, std::size_t count, double scale, std::span<double> probs,
            std::span<double> out) {
  const auto& k = kernels::active();
  const std::size_t dh = q.size();
  for (std::size_t j = 0; j < count; ++j) probs[j] = k.dot(q.data(), keys + j * stride, dh) * scale;
  softmax(probs.first(count), probs.first(count));
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < count; ++j) k.axpy(probs[j], values + j * stride, out.data(), dh);
}

}  // namespace pointcopy::rowops
