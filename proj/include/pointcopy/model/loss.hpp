#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pointcopy/data/trace.hpp"
#include "pointcopy/model/model.hpp"
#include "pointcopy/pointer/pointer.hpp"

namespace pointcopy {

// How one trace is presented to the model under teacher forcing.
struct TraceLayout {
  MixedSequence input;                        // image, prompt, target minus its last symbol
  std::vector<std::size_t> predict_positions; // position whose output predicts target[j]
  std::vector<std::size_t> gold;              // global augmented index of target[j]
};

TraceLayout layout_trace(const GroundedTrace& trace, const ModelConfig& config);

struct LossReport {
  double total = 0.0;  // ce + zloss
  double ce = 0.0;     // mean NLL of the gold augmented symbol per target position
  double zloss = 0.0;  // mean z-loss per target position
  std::size_t positions = 0;
  std::size_t ptr_total = 0;    // gold pointer positions
  std::size_t ptr_correct = 0;  // ... where the argmax matches
};

// Mean over all target positions in the batch. With accumulate_grads the
// gradient of `total` is added into the model's Param::grad buffers.
LossReport training_loss(Model& model, std::span<const GroundedTrace> batch, const ZLossConfig& zcfg,
                         bool accumulate_grads);
LossReport evaluate_loss(const Model& model, std::span<const GroundedTrace> batch, const ZLossConfig& zcfg);

}  // namespace pointcopy
