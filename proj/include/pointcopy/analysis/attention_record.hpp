#pragma once

#include <cstddef>
#include <vector>

namespace pointcopy {

struct PositionTag {
  enum class Kind { kText, kImage, kCopy };
  Kind kind = Kind::kText;
  std::size_t patch = 0;  // patch index for kImage / kCopy

  static PositionTag text() { return {Kind::kText, 0}; }
  static PositionTag image(std::size_t k) { return {Kind::kImage, k}; }
  static PositionTag copy(std::size_t k) { return {Kind::kCopy, k}; }

  friend bool operator==(const PositionTag&, const PositionTag&) = default;
};

// Head-averaged attention from the most recent position at one decode step.
struct AttentionStep {
  std::size_t step = 0;
  // layers[l][j]: weight on context position j; every row sums to 1.
  std::vector<std::vector<double>> layers;
};

struct AttentionRecord {
  // Tag of every position that appears in any stored row.
  std::vector<PositionTag> tags;
  std::vector<AttentionStep> steps;
  std::size_t layer_count = 0;
};

}  // namespace pointcopy
