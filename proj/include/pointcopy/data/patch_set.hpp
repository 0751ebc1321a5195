#pragma once

#include <cstddef>

#include "pointcopy/numerics/tensor.hpp"

namespace pointcopy {

// Feature layout of one synthetic patch: an 8-dim attribute code followed by
// one-hot row and column indicators sized for the largest supported grid.
inline constexpr std::size_t kAttributeDim = 8;
inline constexpr std::size_t kMaxGridSide = 8;
inline constexpr std::size_t kPatchFeatures = kAttributeDim + 2 * kMaxGridSide;

struct GridGeometry {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t patch_px = 16;

  std::size_t patch_count() const noexcept { return rows * cols; }
  std::size_t width_px() const noexcept { return cols * patch_px; }
  std::size_t height_px() const noexcept { return rows * patch_px; }
  // Row-major: k = row * cols + col
  std::size_t index(std::size_t row, std::size_t col) const noexcept { return row * cols + col; }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

// The K continuous patch vectors of one image (K x feature_dim).
struct PatchSet {
  GridGeometry grid;
  Tensor2 vectors;

  std::size_t size() const noexcept { return vectors.rows(); }

  friend bool operator==(const PatchSet&, const PatchSet&) = default;
};

}  // namespace pointcopy
