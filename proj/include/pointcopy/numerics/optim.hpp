#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>

#include "pointcopy/numerics/tensor.hpp"

namespace pointcopy {

struct AdamWConfig {
  double lr = 3e-5;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct Moments {
  Tensor2 first;
  Tensor2 second;
};

// Optimiser state; moments are keyed by parameter name so they survive a
// checkpoint round trip independent of parameter order.
struct OptimState {
  AdamWConfig config;
  std::size_t step = 0;
  std::map<std::string, Moments> moments;
};

// One AdamW update (decoupled weight decay) using the accumulated grads, then
// zeroes them. Throws TrainingError naming the first parameter whose gradient
// is not finite; in that case no parameter is modified.
void adamw_step(std::span<Param> params, OptimState& opt);

}  // namespace pointcopy
