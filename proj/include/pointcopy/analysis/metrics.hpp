#pragma once

// Grounding-decay metrics over recorded decode attention. All functions are
// pure in the record.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pointcopy/analysis/attention_record.hpp"

namespace pointcopy {

struct Series {
  std::string metric;
  std::size_t layer = 0;
  std::vector<std::size_t> steps;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
};

// Per step: total attention mass on image-tagged positions.
Series cumulative_image_attention(const AttentionRecord& rec, std::size_t layer);

// Per step: mean attention over the bbox patches divided by the mean over
// all image patches. Steps with a zero denominator are skipped.
Series bbox_attention_ratio(const AttentionRecord& rec, std::size_t layer,
                            std::span<const std::size_t> bbox_patches);

struct CopyAttention {
  Series input;  // mass on the original image positions of copied patches
  Series copy;   // mass on the copy positions
};

// Only steps whose context already holds at least one copy position are
// reported. Throws InputError when the record contains no copy position.
CopyAttention copy_vs_input_attention(const AttentionRecord& rec, std::size_t layer);

struct DecaySeries {
  std::vector<Series> cumulative;  // one per layer
  std::vector<Series> ratio;       // one per layer; empty when no bbox given
};

DecaySeries decay_series(const AttentionRecord& rec, std::span<const std::size_t> bbox_patches);

}  // namespace pointcopy
