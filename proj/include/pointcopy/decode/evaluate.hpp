#pragma once

#include <cstddef>
#include <span>

#include "pointcopy/data/trace.hpp"
#include "pointcopy/decode/decode.hpp"

namespace pointcopy {

struct EvalReport {
  std::size_t tasks = 0;
  std::size_t answers_correct = 0;  // forced choice among the answer class
  std::size_t answers_exact = 0;    // free-running output matches the gold answer
  std::size_t ptr_total = 0;    // gold pointer positions
  std::size_t ptr_correct = 0;  // ... where the decoded symbol at that position matches

  double answer_accuracy() const noexcept {
    return tasks == 0 ? 0.0 : static_cast<double>(answers_correct) / static_cast<double>(tasks);
  }
  double exact_accuracy() const noexcept {
    return tasks == 0 ? 0.0 : static_cast<double>(answers_exact) / static_cast<double>(tasks);
  }
  double pointer_accuracy() const noexcept {
    return ptr_total == 0 ? 0.0 : static_cast<double>(ptr_correct) / static_cast<double>(ptr_total);
  }
};

// Free-running decode of every trace's prompt. The answer step is the one
// that emitted the last vocabulary token before <eos> (the final step when
// there is none); the forced-choice answer is the highest generation logit at
// that step among answer_choices(gold). cfg.max_new of 0 means target
// length + 4.
EvalReport evaluate_decoding(const Model& model, std::span<const GroundedTrace> traces, const DecodeConfig& cfg);

}  // namespace pointcopy
