#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "pointcopy/analysis/csv.hpp"
#include "pointcopy/analysis/grounding.hpp"
#include "pointcopy/analysis/metrics.hpp"
#include "pointcopy/data/tasks.hpp"
#include "pointcopy/error.hpp"
#include "support/oracles.hpp"
#include "support/planted.hpp"

using namespace pointcopy;

namespace {

AttentionRecord uniform_record(std::size_t image, std::size_t text) {
  AttentionRecord r;
  r.layer_count = 1;
  for (std::size_t k = 0; k < image; ++k) r.tags.push_back(PositionTag::image(k));
  for (std::size_t i = 0; i < text; ++i) r.tags.push_back(PositionTag::text());
  const std::size_t n = image + text;
  r.steps.push_back({0, {std::vector<double>(n, 1.0 / static_cast<double>(n))}});
  r.steps.push_back({1, {std::vector<double>(n, 1.0 / static_cast<double>(n))}});
  return r;
}

bool contains_patch(const BBox& b, const GridGeometry& g, std::size_t row, std::size_t col) {
  const double cx = (static_cast<double>(col) + 0.5) * static_cast<double>(g.patch_px);
  const double cy = (static_cast<double>(row) + 0.5) * static_cast<double>(g.patch_px);
  return cx >= b.x0 && cx < b.x1 && cy >= b.y0 && cy < b.y1;
}

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("cumulative image attention") {
  const AttentionRecord r = uniform_record(4, 4);
  const Series s = cumulative_image_attention(r, 0);
  REQUIRE(s.size() == 2);
  CHECK(s.values[0] == doctest::Approx(0.5).epsilon(1e-15));

  const Series none = cumulative_image_attention(uniform_record(0, 3), 0);
  for (double v : none.values) CHECK(v == 0.0);
  CHECK_THROWS_AS(cumulative_image_attention(r, 1), InputError);
}

TEST_CASE("bbox attention ratio") {
  AttentionRecord r;
  r.layer_count = 1;
  for (std::size_t k = 0; k < 4; ++k) r.tags.push_back(PositionTag::image(k));
  r.tags.push_back(PositionTag::text());
  // Image weights 0.2, 0.0, 0.1, 0.1: bbox {0} mean 0.2, all-image mean 0.1.
  r.steps.push_back({0, {{0.2, 0.0, 0.1, 0.1, 0.6}}});
  const std::vector<std::size_t> box{0};
  CHECK(bbox_attention_ratio(r, 0, box).values[0] == doctest::Approx(2.0).epsilon(1e-15));

  const AttentionRecord u = uniform_record(4, 2);
  const std::vector<std::size_t> all{0, 1, 2, 3};
  for (double v : bbox_attention_ratio(u, 0, all).values) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(bbox_attention_ratio(u, 0, std::vector<std::size_t>{}), InputError);
  CHECK_THROWS_AS(bbox_attention_ratio(u, 0, std::vector<std::size_t>{7}), InputError);

  AttentionRecord zero = r;
  zero.steps[0].layers[0] = {0.0, 0.0, 0.0, 0.0, 1.0};
  CHECK(bbox_attention_ratio(zero, 0, box).size() == 0);
}

TEST_CASE("copy versus input attention") {
  AttentionRecord r;
  r.layer_count = 1;
  for (std::size_t k = 0; k < 3; ++k) r.tags.push_back(PositionTag::image(k));
  r.tags.push_back(PositionTag::text());
  CHECK_THROWS_AS(copy_vs_input_attention(r, 0), InputError);

  r.tags.push_back(PositionTag::copy(1));
  r.steps.push_back({0, {{0.25, 0.25, 0.25, 0.25}}});          // before the copy
  r.steps.push_back({1, {{0.1, 0.3, 0.1, 0.2, 0.3}}});          // copy(1) mirrors image(1)
  const CopyAttention ca = copy_vs_input_attention(r, 0);
  REQUIRE(ca.input.size() == 1);
  CHECK(ca.input.steps[0] == 1);
  CHECK(ca.input.values[0] == ca.copy.values[0]);

  r.steps.push_back({2, {{0.5, 0.2, 0.3, 0.0, 0.0}}});
  const CopyAttention z = copy_vs_input_attention(r, 0);
  CHECK(z.copy.values[1] == 0.0);
  CHECK(z.input.values[1] == doctest::Approx(0.2));
}

TEST_CASE("metrics match tag-and-sum recomputation on random records") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t K = 4 + rng() % 12;
    const AttentionRecord r = oracle::random_record(rng, K, 5 + rng() % 20, 1 + rng() % 15, 2);
    std::set<std::size_t> bbox;
    while (bbox.size() < 1 + rng() % 3) bbox.insert(rng() % K);
    const std::vector<std::size_t> bbox_vec(bbox.begin(), bbox.end());
    for (std::size_t l = 0; l < 2; ++l) {
      const Series cum = cumulative_image_attention(r, l);
      const Series ratio = bbox_attention_ratio(r, l, bbox_vec);
      std::size_t ri = 0;
      for (std::size_t s = 0; s < r.steps.size(); ++s) {
        const auto& row = r.steps[s].layers[l];
        CHECK(std::abs(cum.values[s] - oracle::image_mass(r, row)) < 1e-12);
        if (const auto want = oracle::bbox_ratio(r, row, bbox)) {
          REQUIRE(ri < ratio.size());
          CHECK(ratio.steps[ri] == s);
          CHECK(std::abs(ratio.values[ri] - *want) < 1e-12);
          ++ri;
        }
      }
      CHECK(ri == ratio.size());
    }
  }
}

TEST_CASE("decay series covers every layer") {
  std::mt19937_64 rng(3);
  const AttentionRecord r = oracle::random_record(rng, 6, 10, 5, 3);
  const std::vector<std::size_t> box{1, 2};
  const DecaySeries d = decay_series(r, box);
  CHECK(d.cumulative.size() == 3);
  CHECK(d.ratio.size() == 3);
  CHECK(decay_series(r, {}).ratio.empty());
}

TEST_CASE("contrast bbox from maps") {
  const GridGeometry g{1, 2, 16};
  const std::vector<double> a{0.2, 0.1}, b{0.1, 0.1};
  const GroundingResult res = contrast_bbox_from_maps(a, b, g, std::vector<double>{0.5});
  CHECK(res.relevance[0] == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(res.relevance[1] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(res.peak == 0);
  CHECK(res.bbox == BBox{0, 0, 16, 16});

  CHECK_THROWS_AS(contrast_bbox_from_maps(a, std::vector<double>{0.0, 0.0}, g, std::vector<double>{0.5}),
                  GroundingError);
  CHECK_THROWS_AS(contrast_bbox_from_maps(a, std::vector<double>{1.0}, g, std::vector<double>{0.5}),
                  DimensionError);
}

TEST_CASE("crop rectangles stay inside the grid") {
  const GridGeometry g{8, 8, 16};
  for (std::size_t peak : {0u, 7u, 56u, 63u, 27u}) {
    for (double ratio : {0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 1.0}) {
      const PatchRect r = crop_rect(g, peak, ratio);
      CHECK(r.height >= 1);
      CHECK(r.width >= 1);
      CHECK(r.row0 + r.height <= 8);
      CHECK(r.col0 + r.width <= 8);
      CHECK(peak / 8 >= r.row0);
      CHECK(peak / 8 < r.row0 + r.height);
      CHECK(peak % 8 >= r.col0);
      CHECK(peak % 8 < r.col0 + r.width);
    }
  }
  std::vector<double> a(64, 0.01), b(64, 0.01);
  a[63] = 1.0;
  const auto res = contrast_bbox_from_maps(a, b, g, GroundingConfig{}.crop_ratios);
  CHECK(res.bbox.x1 <= 128);
  CHECK(res.bbox.y1 <= 128);
  CHECK(res.bbox.area() > 0);
  CHECK(contains_patch(res.bbox, g, 7, 7));
}

TEST_CASE("contrast is invariant to a common scale") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  const GridGeometry g{8, 8, 16};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(64), b(64);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    std::vector<double> a2 = a, b2 = b;
    for (auto& v : a2) v *= 8.0;
    for (auto& v : b2) v *= 8.0;
    const auto r1 = contrast_bbox_from_maps(a, b, g, GroundingConfig{}.crop_ratios);
    const auto r2 = contrast_bbox_from_maps(a2, b2, g, GroundingConfig{}.crop_ratios);
    CHECK(r1.bbox == r2.bbox);
  }
}

TEST_CASE("planted model grounds the named patch") {
  const Model m = planted::model();
  TaskOptions opts;
  opts.grid = GridGeometry{8, 8, 16};
  const GroundedTrace t = synthesize_task(1, opts, TaskKind::kLookup);
  const auto res = attention_contrast_bbox(m, t.patches, planted::description(2, 3), planted::baseline());
  CHECK(res.peak == 2 * 8 + 3);
  CHECK(contains_patch(res.bbox, opts.grid, 2, 3));
  GroundingConfig cfg;
  cfg.layers = {5};
  CHECK_THROWS_AS(attention_contrast_bbox(m, t.patches, planted::description(2, 3), planted::baseline(), cfg),
                  InputError);
}

TEST_CASE("csv output") {
  CHECK(render_csv({}) == "step\n");
  const std::vector<Series> empty{Series{"cumulative_image", 0, {}, {}}};
  CHECK(render_csv(empty) == "step,cumulative_image.l0\n");

  const std::vector<Series> s{Series{"a", 1, {0, 1, 2}, {0.1, 1.0 / 3.0, 2.5}},
                              Series{"b", 1, {1, 2}, {1e-12, -7.0}}};
  const std::string text = render_csv(s);
  CHECK(text == "step,a.l1,b.l1\n0,0.1,\n1,0.333333333,1e-12\n2,2.5,-7\n");
  const auto rows = read_csv(text);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::stoul(rows[i + 1][0]) == i);
    CHECK(std::stod(rows[i + 1][1]) == doctest::Approx(s[0].values[i]).epsilon(1e-8));
  }

  const auto p1 = std::filesystem::temp_directory_path() / "pointcopy_test_a.csv";
  const auto p2 = std::filesystem::temp_directory_path() / "pointcopy_test_b.csv";
  emit_csv(s, p1);
  emit_csv(s, p2);
  std::ifstream f1(p1), f2(p2);
  std::stringstream b1, b2;
  b1 << f1.rdbuf();
  b2 << f2.rdbuf();
  CHECK(b1.str() == b2.str());
  CHECK(b1.str() == text);
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
  CHECK_THROWS_AS(emit_csv(s, "/nonexistent-dir/x.csv"), IoError);
}
