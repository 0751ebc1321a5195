#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pointcopy/data/patch_set.hpp"
#include "pointcopy/data/trace.hpp"
#include "pointcopy/model/model.hpp"
#include "pointcopy/pointer/pointer.hpp"

namespace pointcopy {

struct GroundingConfig {
  // Empty selects the middle layer of the model.
  std::vector<std::size_t> layers;
  std::vector<double> crop_ratios{0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  double eps = 1e-9;
};

struct GroundingResult {
  BBox bbox;
  std::vector<double> relevance;
  std::size_t peak = 0;
  std::size_t row0 = 0, col0 = 0, height = 0, width = 0;
  double ratio = 0.0;
  double score = 0.0;
};

// Head-averaged attention of the final prompt position over the K image
// positions, averaged across `layers`.
std::vector<double> image_attention_map(const Model& model, const PatchSet& patches,
                                        std::span<const TokenId> prompt,
                                        std::span<const std::size_t> layers);

// Patch rectangle of roughly ratio * K patches centred on `peak`, shifted to
// stay inside the grid.
struct PatchRect {
  std::size_t row0 = 0, col0 = 0, height = 1, width = 1;
};
PatchRect crop_rect(const GridGeometry& grid, std::size_t peak, double ratio);

GroundingResult contrast_bbox_from_maps(std::span<const double> attn, std::span<const double> baseline,
                                        const GridGeometry& grid, std::span<const double> crop_ratios,
                                        double eps = 1e-9);

GroundingResult attention_contrast_bbox(const Model& model, const PatchSet& patches,
                                        std::span<const TokenId> description_prompt,
                                        std::span<const TokenId> baseline_prompt,
                                        const GroundingConfig& config = {});

}  // namespace pointcopy
