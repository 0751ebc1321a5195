#pragma once

// Row-at-a-time forward primitives. The autodiff ops and the incremental
// decoder both go through these, so a row computed inside a full-sequence
// graph is bit-identical to the same row computed from a KV cache.

#include <cstddef>
#include <span>

#include "pointcopy/numerics/tensor.hpp"

namespace pointcopy::rowops {

inline constexpr double kLayerNormEps = 1e-5;

// y = x W (+ b)
void linear(std::span<const double> x, const Tensor2& w, const Tensor2* b, std::span<double> y);

struct NormStats {
  double mean;
  double rstd;
};

NormStats layernorm(std::span<const double> x, std::span<const double> gamma,
                    std::span<const double> beta, std::span<double> y);

// tanh approximation
double gelu(double x);
double gelu_grad(double x);

// Stabilised by subtracting the row max.
void softmax(std::span<const double> x, std::span<double> y);

// One query row of one head attending to `count` cached keys/values laid out
// with row stride `stride`. Writes the normalised weights to `probs[0..count)`.
void attend(std::span<const double> q, const double* keys, const double* values,
            std::size_t stride, std::size_t count, double scale, std::span<double> probs,
            std::span<double> out);

}  // namespace pointcopy::rowops
