#include "pointcopy/analysis/grounding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pointcopy/data/grid.hpp"
#include "pointcopy/error.hpp"

namespace pointcopy {

std::vector<double> image_attention_map(const Model& model, const PatchSet& patches,
                                        std::span<const TokenId> prompt,
                                        std::span<const std::size_t> layers) {
  if (patches.size() == 0) throw InputError("grounding needs at least one patch");
  if (prompt.empty()) throw InputError("grounding prompt is empty");
  const ModelConfig& cfg = model.config();
  std::vector<std::size_t> use(layers.begin(), layers.end());
  if (use.empty()) use.push_back(cfg.layers / 2);
  for (std::size_t l : use) {
    if (l >= cfg.layers) throw InputError("grounding layer " + std::to_string(l) + " out of range");
  }

  const MixedSequence seq = image_then_prompt(patches.size(), prompt);
  const HiddenStates hs = forward(model, seq, patches, true);
  const std::size_t last = seq.elements.size() - 1;
  const std::size_t k_count = patches.size();

  std::vector<double> map(k_count, 0.0);
  for (std::size_t l : use) {
    const auto& heads = hs.attention.at(l);
    for (const Tensor2& a : heads) {
      for (std::size_t k = 0; k < k_count; ++k) map[k] += a(last, k);
    }
  }
  const double denom = static_cast<double>(use.size() * cfg.heads);
  for (double& v : map) v /= denom;
  return map;
}

PatchRect crop_rect(const GridGeometry& grid, std::size_t peak, double ratio) {
  const std::size_t k = grid.patch_count();
  if (peak >= k) throw InputError("peak patch out of range");
  if (!(ratio > 0.0)) throw InputError("crop ratio must be positive");
  const double area = std::max(1.0, std::round(ratio * static_cast<double>(k)));
  const double aspect = static_cast<double>(grid.rows) / static_cast<double>(grid.cols);
  auto h = static_cast<std::size_t>(std::round(std::sqrt(area * aspect)));
  h = std::clamp<std::size_t>(h, 1, grid.rows);
  auto w = static_cast<std::size_t>(std::round(area / static_cast<double>(h)));
  w = std::clamp<std::size_t>(w, 1, grid.cols);

  const auto place = [](std::size_t centre, std::size_t len, std::size_t limit) {
    const std::size_t half = (len - 1) / 2;
    std::size_t start = centre >= half ? centre - half : 0;
    if (start + len > limit) start = limit - len;
    return start;
  };
  PatchRect r;
  r.height = h;
  r.width = w;
  r.row0 = place(peak / grid.cols, h, grid.rows);
  r.col0 = place(peak % grid.cols, w, grid.cols);
  return r;
}

GroundingResult contrast_bbox_from_maps(std::span<const double> attn, std::span<const double> baseline,
                                        const GridGeometry& grid, std::span<const double> crop_ratios,
                                        double eps) {
  const std::size_t k = grid.patch_count();
  if (attn.size() != k || baseline.size() != k) {
    throw DimensionError("attention maps must have one entry per patch");
  }
  if (std::all_of(baseline.begin(), baseline.end(), [](double v) { return v == 0.0; })) {
    throw GroundingError("baseline attention map is all zero");
  }
  if (crop_ratios.empty()) throw InputError("no crop ratios configured");

  GroundingResult res;
  res.relevance.resize(k);
  for (std::size_t i = 0; i < k; ++i) res.relevance[i] = attn[i] / (baseline[i] + eps);
  res.peak = static_cast<std::size_t>(
      std::max_element(res.relevance.begin(), res.relevance.end()) - res.relevance.begin());

  bool found = false;
  double best = -std::numeric_limits<double>::infinity();
  PatchRect best_rect{0, 0, grid.rows, grid.cols};
  double best_ratio = crop_ratios.front();
  for (double ratio : crop_ratios) {
    const PatchRect r = crop_rect(grid, res.peak, ratio);
    double in_sum = 0.0, out_sum = 0.0;
    std::size_t in_n = 0, out_n = 0;
    for (std::size_t row = 0; row < grid.rows; ++row) {
      for (std::size_t col = 0; col < grid.cols; ++col) {
        const double v = res.relevance[grid.index(row, col)];
        const bool inside = row >= r.row0 && row < r.row0 + r.height && col >= r.col0 && col < r.col0 + r.width;
        if (inside) {
          in_sum += v;
          ++in_n;
        } else {
          out_sum += v;
          ++out_n;
        }
      }
    }
    if (out_n == 0) continue;
    const double out_mean = out_sum / static_cast<double>(out_n);
    const double score = (in_sum / static_cast<double>(in_n)) / (out_mean + eps);
    if (!found || score > best) {
      found = true;
      best = score;
      best_rect = r;
      best_ratio = ratio;
    }
  }
  res.row0 = best_rect.row0;
  res.col0 = best_rect.col0;
  res.height = best_rect.height;
  res.width = best_rect.width;
  res.ratio = best_ratio;
  res.score = found ? best : 1.0;
  res.bbox = patch_rect_bbox(grid, res.row0, res.col0, res.height, res.width);
  return res;
}

GroundingResult attention_contrast_bbox(const Model& model, const PatchSet& patches,
                                        std::span<const TokenId> description_prompt,
                                        std::span<const TokenId> baseline_prompt,
                                        const GroundingConfig& config) {
  const auto a = image_attention_map(model, patches, description_prompt, config.layers);
  const auto b = image_attention_map(model, patches, baseline_prompt, config.layers);
  return contrast_bbox_from_maps(a, b, patches.grid, config.crop_ratios, config.eps);
}

}  // namespace pointcopy
