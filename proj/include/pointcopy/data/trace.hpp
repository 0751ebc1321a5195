#pragma once

#include <string>
#include <vector>

#include "pointcopy/data/patch_set.hpp"
#include "pointcopy/pointer/pointer.hpp"

namespace pointcopy {

// Pixel-space box, half open: [x0, x1) x [y0, y1).
struct BBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double area() const noexcept { return (x1 - x0) * (y1 - y0); }
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct ObjectEntry {
  std::string label;
  BBox bbox;

  friend bool operator==(const ObjectEntry&, const ObjectEntry&) = default;
};

// One training example: prompt tokens, the image, and a target that
// interleaves text tokens with pointer runs into the image.
struct GroundedTrace {
  std::vector<TokenId> prompt;
  PatchSet patches;
  std::vector<AugToken> target;
  std::vector<ObjectEntry> objects;

  friend bool operator==(const GroundedTrace&, const GroundedTrace&) = default;
};

}  // namespace pointcopy
