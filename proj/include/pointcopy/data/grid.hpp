#pragma once

#include <cstddef>
#include <string>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pointcopy/data/patch_set.hpp"
#include "pointcopy/data/trace.hpp"

namespace pointcopy {

// Throws InputError unless 0 <= x0 < x1 <= width and 0 <= y0 < y1 <= height.
void validate_bbox(const BBox& box, const GridGeometry& grid);

// Pixel box covering patch rows [row, row + h) and columns [col, col + w).
BBox patch_rect_bbox(const GridGeometry& grid, std::size_t row, std::size_t col, std::size_t h = 1,
                     std::size_t w = 1);

// Row-major indices of every patch whose centre lies inside the (half-open)
// box. Never empty: if no centre is inside, returns the patch containing the
// box centre.
std::vector<std::size_t> bbox_to_patch_indices(const BBox& box, const GridGeometry& grid);

// "<ptr0><ptr1>..." in the given order.
std::string render_pointer_tokens(std::span<const std::size_t> indices);
std::string pointer_tokens_for_bbox(const BBox& box, const GridGeometry& grid);

// Inverse of render_pointer_tokens; whitespace between tokens is allowed.
// Throws ParseError on anything else, including zero-padded numbers.
std::vector<std::size_t> parse_pointer_tokens(std::string_view text);

// Parses the decimal part of a single "<ptrN>" token; nullopt when malformed.
std::optional<std::size_t> parse_pointer_token(std::string_view token);

}  // namespace pointcopy
