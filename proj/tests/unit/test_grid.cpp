#include <doctest.h>

#include <random>

#include "pointcopy/data/grid.hpp"
#include "pointcopy/error.hpp"

using namespace pointcopy;

namespace {

BBox random_box(std::mt19937_64& rng, const GridGeometry& g) {
  std::uniform_real_distribution<double> ux(0.0, static_cast<double>(g.width_px()));
  std::uniform_real_distribution<double> uy(0.0, static_cast<double>(g.height_px()));
  double x0 = ux(rng), x1 = ux(rng), y0 = uy(rng), y1 = uy(rng);
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  return {x0, y0, x1 + 0.5 > g.width_px() ? x1 : x1 + 0.5, y1 + 0.5 > g.height_px() ? y1 : y1 + 0.5};
}

}  // namespace

TEST_CASE("bbox to patch indices") {
  const GridGeometry g{4, 4, 16};
  CHECK(bbox_to_patch_indices({0, 0, 32, 32}, g) == std::vector<std::size_t>{0, 1, 4, 5});
  CHECK(bbox_to_patch_indices({36, 20, 40, 26}, g) == std::vector<std::size_t>{6});
  CHECK(bbox_to_patch_indices({0, 0, 64, 64}, g).size() == 16);
}

TEST_CASE("bbox indices match a brute-force centre scan") {
  std::mt19937_64 rng(5);
  for (const GridGeometry g : {GridGeometry{4, 4, 16}, GridGeometry{8, 8, 16}, GridGeometry{3, 5, 10}}) {
    for (int i = 0; i < 300; ++i) {
      const BBox b = random_box(rng, g);
      std::vector<std::size_t> want;
      for (std::size_t k = 0; k < g.patch_count(); ++k) {
        const double cx = (static_cast<double>(k % g.cols) + 0.5) * static_cast<double>(g.patch_px);
        const double cy = (static_cast<double>(k / g.cols) + 0.5) * static_cast<double>(g.patch_px);
        if (cx >= b.x0 && cx < b.x1 && cy >= b.y0 && cy < b.y1) want.push_back(k);
      }
      if (want.empty()) {
        const auto col = static_cast<std::size_t>((b.x0 + b.x1) / 2 / static_cast<double>(g.patch_px));
        const auto row = static_cast<std::size_t>((b.y0 + b.y1) / 2 / static_cast<double>(g.patch_px));
        want.push_back(std::min(row, g.rows - 1) * g.cols + std::min(col, g.cols - 1));
      }
      CHECK(bbox_to_patch_indices(b, g) == want);
    }
  }
}

TEST_CASE("invalid boxes are rejected") {
  const GridGeometry g{4, 4, 16};
  CHECK_THROWS_AS(validate_bbox({10, 0, 5, 5}, g), InputError);
  CHECK_THROWS_AS(validate_bbox({0, 0, 65, 5}, g), InputError);
  CHECK_THROWS_AS(validate_bbox({-1, 0, 5, 5}, g), InputError);
  CHECK_THROWS_AS(bbox_to_patch_indices({3, 3, 3, 9}, g), InputError);
  CHECK_NOTHROW(validate_bbox({0, 0, 64, 64}, g));
}

TEST_CASE("pointer token rendering") {
  CHECK(render_pointer_tokens(std::vector<std::size_t>{0, 1, 4, 5}) == "<ptr0><ptr1><ptr4><ptr5>");
  CHECK(render_pointer_tokens(std::vector<std::size_t>{6}) == "<ptr6>");
  CHECK(pointer_tokens_for_bbox({0, 0, 32, 32}, GridGeometry{4, 4, 16}) == "<ptr0><ptr1><ptr4><ptr5>");
  CHECK(parse_pointer_tokens("<ptr3> <ptr12>") == std::vector<std::size_t>{3, 12});
  CHECK(parse_pointer_tokens("").empty());
  CHECK_THROWS_AS(parse_pointer_tokens("<ptr03>"), ParseError);
  CHECK_THROWS_AS(parse_pointer_tokens("<ptr>"), ParseError);
  CHECK_THROWS_AS(parse_pointer_tokens("<ptr1"), ParseError);
  CHECK_THROWS_AS(parse_pointer_tokens("ptr1"), ParseError);
  CHECK(parse_pointer_token("<ptr0>") == std::optional<std::size_t>{0});
  CHECK_FALSE(parse_pointer_token("<ptr-1>"));
}

TEST_CASE("render and parse round trip") {
  std::mt19937_64 rng(17);
  const GridGeometry g{8, 8, 16};
  for (int i = 0; i < 500; ++i) {
    const auto idx = bbox_to_patch_indices(random_box(rng, g), g);
    CHECK(parse_pointer_tokens(render_pointer_tokens(idx)) == idx);
  }
}

TEST_CASE("patch rectangles") {
  const GridGeometry g{4, 4, 16};
  const BBox b = patch_rect_bbox(g, 1, 2, 2, 1);
  CHECK(b == BBox{32, 16, 48, 48});
  CHECK(bbox_to_patch_indices(b, g) == std::vector<std::size_t>{6, 10});
  CHECK_THROWS_AS(patch_rect_bbox(g, 3, 3, 2, 1), InputError);
}
