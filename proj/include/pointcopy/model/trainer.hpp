#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pointcopy/data/trace.hpp"
#include "pointcopy/model/loss.hpp"
#include "pointcopy/model/model.hpp"
#include "pointcopy/numerics/optim.hpp"

namespace pointcopy {

struct TrainConfig {
  double lr = 3e-5;
  std::size_t batch = 2;
  std::size_t grad_accum = 4;
  std::size_t epochs = 5;
  std::uint64_t seed = 0;
  double weight_decay = 0.0;
};

struct StepLog {
  std::size_t step = 0;   // 1-based optimiser step
  std::size_t epoch = 0;  // 0-based
  LossReport report;      // measured before the update
};

// Optimiser steps per epoch: ceil(n / (batch * grad_accum)).
std::size_t steps_per_epoch(std::size_t n, const TrainConfig& cfg);

// Deterministic permutation of [0, n) for one epoch.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

// Runs optimiser steps opt.step + 1 ... until `epochs` are complete or
// `max_steps` total steps have been taken (0 means no cap). A resumed run
// with restored parameters and optimiser state continues the exact same
// sequence of batches. Throws TrainingError naming the step on a non-finite
// loss or gradient.
void train(Model& model, OptimState& opt, std::span<const GroundedTrace> data, const TrainConfig& cfg,
           const ZLossConfig& zcfg, const std::function<void(const StepLog&)>& on_step = {},
           std::size_t max_steps = 0);

// Optimiser moments and step count as checkpoint records ("adam.m.<name>",
// "adam.v.<name>", "adam.step").
std::vector<NamedTensor> optimizer_records(const OptimState& opt);
// Restores what optimizer_records wrote; records with other names are ignored.
void restore_optimizer(OptimState& opt, const std::vector<NamedTensor>& records);

}  // namespace pointcopy
