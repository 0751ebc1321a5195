#include "pointcopy/model/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "pointcopy/error.hpp"

namespace pointcopy {
namespace {

constexpr std::string_view kFirst = "adam.m.";
constexpr std::string_view kSecond = "adam.v.";
constexpr std::string_view kStep = "adam.step";

}  // namespace

std::size_t steps_per_epoch(std::size_t n, const TrainConfig& cfg) {
  const std::size_t per_step = cfg.batch * cfg.grad_accum;
  if (per_step == 0) throw InputError("batch and grad_accum must be positive");
  return (n + per_step - 1) / per_step;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

void train(Model& model, OptimState& opt, std::span<const GroundedTrace> data, const TrainConfig& cfg,
           const ZLossConfig& zcfg, const std::function<void(const StepLog&)>& on_step, std::size_t max_steps) {
  if (data.empty()) throw InputError("training set is empty");
  opt.config.lr = cfg.lr;
  opt.config.weight_decay = cfg.weight_decay;
  const std::size_t per_epoch = steps_per_epoch(data.size(), cfg);
  std::size_t total = per_epoch * cfg.epochs;
  if (max_steps != 0) total = std::min(total, max_steps);

  std::size_t cached_epoch = static_cast<std::size_t>(-1);
  std::vector<std::size_t> order;
  std::vector<GroundedTrace> micro;
  model.zero_grad();
  while (opt.step < total) {
    const std::size_t epoch = opt.step / per_epoch;
    const std::size_t in_epoch = opt.step % per_epoch;
    if (epoch != cached_epoch) {
      order = epoch_order(data.size(), cfg.seed, epoch);
      cached_epoch = epoch;
    }
    const std::size_t begin = in_epoch * cfg.batch * cfg.grad_accum;
    const std::size_t end = std::min(begin + cfg.batch * cfg.grad_accum, data.size());

    // Each micro-batch contributes in proportion to its target positions, so
    // the accumulated gradient is that of the mean over the whole step.
    std::size_t step_positions = 0;
    for (std::size_t i = begin; i < end; ++i) step_positions += data[order[i]].target.size();

    LossReport agg;
    for (std::size_t mb = begin; mb < end; mb += cfg.batch) {
      micro.clear();
      for (std::size_t i = mb; i < std::min(mb + cfg.batch, end); ++i) micro.push_back(data[order[i]]);
      std::vector<Tensor2> saved;
      saved.reserve(model.params().size());
      for (const Param& p : model.params()) saved.push_back(p.grad);
      model.zero_grad();
      const LossReport r = training_loss(model, micro, zcfg, true);
      const double w = static_cast<double>(r.positions) / static_cast<double>(step_positions);
      auto params = model.params();
      for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto g = params[pi].grad.flat();
        auto s = saved[pi].flat();
        for (std::size_t e = 0; e < g.size(); ++e) g[e] = s[e] + w * g[e];
      }
      agg.total += w * r.total;
      agg.ce += w * r.ce;
      agg.zloss += w * r.zloss;
      agg.positions += r.positions;
      agg.ptr_total += r.ptr_total;
      agg.ptr_correct += r.ptr_correct;
    }
    const std::size_t step_no = opt.step + 1;
    if (!std::isfinite(agg.total)) {
      throw TrainingError("non-finite loss at step " + std::to_string(step_no));
    }
    try {
      adamw_step(model.params(), opt);
    } catch (const TrainingError& e) {
      throw TrainingError("step " + std::to_string(step_no) + ": " + e.what());
    }
    if (on_step) on_step(StepLog{step_no, epoch, agg});
  }
}

std::vector<NamedTensor> optimizer_records(const OptimState& opt) {
  std::vector<NamedTensor> out;
  out.push_back({std::string(kStep), Tensor2(1, 1, static_cast<double>(opt.step))});
  for (const auto& [name, m] : opt.moments) {
    out.push_back({std::string(kFirst) + name, m.first});
    out.push_back({std::string(kSecond) + name, m.second});
  }
  return out;
}

void restore_optimizer(OptimState& opt, const std::vector<NamedTensor>& records) {
  opt.moments.clear();
  opt.step = 0;
  for (const NamedTensor& r : records) {
    if (r.name == kStep) {
      if (r.value.size() != 1) throw DimensionError("adam.step must be a scalar");
      opt.step = static_cast<std::size_t>(r.value(0, 0));
    } else if (r.name.rfind(kFirst, 0) == 0) {
      opt.moments[r.name.substr(kFirst.size())].first = r.value;
    } else if (r.name.rfind(kSecond, 0) == 0) {
      opt.moments[r.name.substr(kSecond.size())].second = r.value;
    }
  }
}

}  // namespace pointcopy
