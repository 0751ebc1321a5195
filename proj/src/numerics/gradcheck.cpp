#include "pointcopy/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace pointcopy {

GradCheckResult grad_check(std::span<Param> params, const LossFn& loss, const GradCheckOptions& opts) {
  for (Param& p : params) p.zero_grad();
  loss(true);
  std::vector<Tensor2> analytic;
  analytic.reserve(params.size());
  for (Param& p : params) {
    analytic.push_back(p.grad);
    p.zero_grad();
  }

  GradCheckResult res;
  std::mt19937_64 rng(opts.seed);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param& p = params[pi];
    std::vector<std::size_t> idx(p.value.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (opts.max_entries_per_param && idx.size() > opts.max_entries_per_param) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(opts.max_entries_per_param);
      std::sort(idx.begin(), idx.end());
    }
    auto w = p.value.flat();
    for (std::size_t i : idx) {
      const double orig = w[i];
      w[i] = orig + opts.eps;
      const double fp = loss(false);
      w[i] = orig - opts.eps;
      const double fm = loss(false);
      w[i] = orig;
      const double num = (fp - fm) / (2.0 * opts.eps);
      const double ana = analytic[pi].flat()[i];
      const double err = std::abs(ana - num) / (std::abs(ana) + std::abs(num) + 1e-12);
      ++res.checked;
      if (err > res.max_rel_error) {
        res.max_rel_error = err;
        res.worst_param = p.name;
        res.worst_index = i;
        res.worst_analytic = ana;
        res.worst_numeric = num;
      }
    }
  }
  return res;
}

}  // namespace pointcopy
