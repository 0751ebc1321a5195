#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "pointcopy/numerics/tensor.hpp"

namespace pointcopy {

// Evaluates a scalar loss at the current parameter values. When
// `accumulate_grads` is true it must also add d(loss)/d(param) into Param::grad.
using LossFn = std::function<double(bool accumulate_grads)>;

struct GradCheckOptions {
  double eps = 1e-5;
  // 0 checks every entry; otherwise a seeded random sample of at most this
  // many entries per parameter tensor.
  std::size_t max_entries_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

// Compares analytic gradients against central differences entry by entry,
// with error |a - n| / (|a| + |n| + 1e-12). Parameter values are restored.
GradCheckResult grad_check(std::span<Param> params, const LossFn& loss, const GradCheckOptions& opts = {});

}  // namespace pointcopy
