#include "pointcopy/data/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>

#include "pointcopy/error.hpp"

namespace pointcopy {

void validate_bbox(const BBox& b, const GridGeometry& grid) {
  const auto w = static_cast<double>(grid.width_px());
  const auto h = static_cast<double>(grid.height_px());
  const bool ok = std::isfinite(b.x0) && std::isfinite(b.y0) && std::isfinite(b.x1) && std::isfinite(b.y1) &&
                  b.x0 >= 0 && b.y0 >= 0 && b.x0 < b.x1 && b.y0 < b.y1 && b.x1 <= w && b.y1 <= h;
  if (!ok) {
    throw InputError("bbox (" + std::to_string(b.x0) + "," + std::to_string(b.y0) + "," +
                     std::to_string(b.x1) + "," + std::to_string(b.y1) + ") is not a valid box inside a " +
                     std::to_string(grid.width_px()) + "x" + std::to_string(grid.height_px()) + " image");
  }
}

BBox patch_rect_bbox(const GridGeometry& grid, std::size_t row, std::size_t col, std::size_t h, std::size_t w) {
  if (h == 0 || w == 0 || row + h > grid.rows || col + w > grid.cols) {
    throw InputError("patch rectangle outside the " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                     " grid");
  }
  const auto px = static_cast<double>(grid.patch_px);
  return {static_cast<double>(col) * px, static_cast<double>(row) * px, static_cast<double>(col + w) * px,
          static_cast<double>(row + h) * px};
}

std::vector<std::size_t> bbox_to_patch_indices(const BBox& b, const GridGeometry& grid) {
  validate_bbox(b, grid);
  const auto px = static_cast<double>(grid.patch_px);
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < grid.rows; ++r) {
    const double cy = (static_cast<double>(r) + 0.5) * px;
    if (cy < b.y0 || cy >= b.y1) continue;
    for (std::size_t c = 0; c < grid.cols; ++c) {
      const double cx = (static_cast<double>(c) + 0.5) * px;
      if (cx >= b.x0 && cx < b.x1) out.push_back(grid.index(r, c));
    }
  }
  if (out.empty()) {
    const auto clampi = [](double v, std::size_t n) {
      return std::min(static_cast<std::size_t>(std::max(0.0, std::floor(v))), n - 1);
    };
    const std::size_t c = clampi(0.5 * (b.x0 + b.x1) / px, grid.cols);
    const std::size_t r = clampi(0.5 * (b.y0 + b.y1) / px, grid.rows);
    out.push_back(grid.index(r, c));
  }
  return out;
}

std::string render_pointer_tokens(std::span<const std::size_t> indices) {
  std::string s;
  for (std::size_t k : indices) s += "<ptr" + std::to_string(k) + ">";
  return s;
}

std::string pointer_tokens_for_bbox(const BBox& b, const GridGeometry& grid) {
  return render_pointer_tokens(bbox_to_patch_indices(b, grid));
}

std::optional<std::size_t> parse_pointer_token(std::string_view tok) {
  constexpr std::string_view head = "<ptr";
  if (tok.size() < head.size() + 2 || tok.substr(0, head.size()) != head || tok.back() != '>') return std::nullopt;
  const std::string_view num = tok.substr(head.size(), tok.size() - head.size() - 1);
  if (num.empty() || (num.size() > 1 && num.front() == '0')) return std::nullopt;
  if (!std::all_of(num.begin(), num.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) return std::nullopt;
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
  if (ec != std::errc() || p != num.data() + num.size()) return std::nullopt;
  return v;
}

std::vector<std::size_t> parse_pointer_tokens(std::string_view text) {
  std::vector<std::size_t> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == ' ' || text[i] == '\t' || text[i] == '\n') {
      ++i;
      continue;
    }
    const std::size_t end = text.find('>', i);
    if (text[i] != '<' || end == std::string_view::npos) {
      throw ParseError("malformed pointer token at offset " + std::to_string(i));
    }
    const auto k = parse_pointer_token(text.substr(i, end - i + 1));
    if (!k) throw ParseError("malformed pointer token '" + std::string(text.substr(i, end - i + 1)) + "'");
    out.push_back(*k);
    i = end + 1;
  }
  return out;
}

}  // namespace pointcopy
