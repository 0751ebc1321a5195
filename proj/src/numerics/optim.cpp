#include "pointcopy/numerics/optim.hpp"

#include <cmath>

#include "pointcopy/error.hpp"

namespace pointcopy {

void adamw_step(std::span<Param> params, OptimState& opt) {
  const AdamWConfig& c = opt.config;
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0)) {
    throw InputError("AdamW betas must lie in [0, 1)");
  }
  for (const Param& p : params) {
    if (!p.grad.all_finite()) throw TrainingError("non-finite gradient in parameter '" + p.name + "'");
  }
  ++opt.step;
  const double t = static_cast<double>(opt.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (Param& p : params) {
    auto [it, fresh] = opt.moments.try_emplace(p.name);
    Moments& m = it->second;
    if (fresh || !m.first.same_shape(p.value)) {
      m.first = Tensor2(p.value.rows(), p.value.cols());
      m.second = Tensor2(p.value.rows(), p.value.cols());
    }
    auto w = p.value.flat();
    auto g = p.grad.flat();
    auto m1 = m.first.flat();
    auto m2 = m.second.flat();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m1[i] = c.beta1 * m1[i] + (1.0 - c.beta1) * g[i];
      m2[i] = c.beta2 * m2[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double mhat = m1[i] / bc1;
      const double vhat = m2[i] / bc2;
      w[i] -= c.lr * (mhat / (std::sqrt(vhat) + c.eps) + c.weight_decay * w[i]);
    }
    p.zero_grad();
  }
}

}  // namespace pointcopy
