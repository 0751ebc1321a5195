#include "pointcopy/analysis/metrics.hpp"

#include <algorithm>
#include <set>

#include "pointcopy/error.hpp"

namespace pointcopy {
namespace {

void check_layer(const AttentionRecord& rec, std::size_t layer) {
  if (layer >= rec.layer_count) {
    throw InputError("layer " + std::to_string(layer) + " not recorded (record has " +
                     std::to_string(rec.layer_count) + ")");
  }
}

const std::vector<double>& row_of(const AttentionStep& s, std::size_t layer) {
  if (layer >= s.layers.size()) throw InputError("attention step lacks layer " + std::to_string(layer));
  return s.layers[layer];
}

}  // namespace

Series cumulative_image_attention(const AttentionRecord& rec, std::size_t layer) {
  check_layer(rec, layer);
  Series out{"cumulative_image", layer, {}, {}};
  for (const AttentionStep& s : rec.steps) {
    const auto& row = row_of(s, layer);
    double sum = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (rec.tags.at(j).kind == PositionTag::Kind::kImage) sum += row[j];
    }
    out.steps.push_back(s.step);
    out.values.push_back(sum);
  }
  return out;
}

Series bbox_attention_ratio(const AttentionRecord& rec, std::size_t layer,
                            std::span<const std::size_t> bbox_patches) {
  check_layer(rec, layer);
  if (bbox_patches.empty()) throw InputError("bbox_attention_ratio: empty bbox patch set");
  const std::set<std::size_t> inside(bbox_patches.begin(), bbox_patches.end());
  std::set<std::size_t> image;
  for (const PositionTag& t : rec.tags) {
    if (t.kind == PositionTag::Kind::kImage) image.insert(t.patch);
  }
  for (std::size_t k : inside) {
    if (!image.count(k)) throw InputError("bbox patch " + std::to_string(k) + " is not an image position");
  }
  Series out{"bbox_ratio", layer, {}, {}};
  for (const AttentionStep& s : rec.steps) {
    const auto& row = row_of(s, layer);
    double in_sum = 0.0, all_sum = 0.0;
    std::size_t in_n = 0, all_n = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const PositionTag& t = rec.tags.at(j);
      if (t.kind != PositionTag::Kind::kImage) continue;
      all_sum += row[j];
      ++all_n;
      if (inside.count(t.patch)) {
        in_sum += row[j];
        ++in_n;
      }
    }
    if (in_n == 0 || all_n == 0 || all_sum == 0.0) continue;
    const double all_mean = all_sum / static_cast<double>(all_n);
    out.steps.push_back(s.step);
    out.values.push_back((in_sum / static_cast<double>(in_n)) / all_mean);
  }
  return out;
}

CopyAttention copy_vs_input_attention(const AttentionRecord& rec, std::size_t layer) {
  check_layer(rec, layer);
  const bool any_copy = std::any_of(rec.tags.begin(), rec.tags.end(),
                                    [](const PositionTag& t) { return t.kind == PositionTag::Kind::kCopy; });
  if (!any_copy) throw InputError("copy_vs_input_attention: record contains no copied patch");
  CopyAttention out{{"input_of_copied", layer, {}, {}}, {"copy", layer, {}, {}}};
  for (const AttentionStep& s : rec.steps) {
    const auto& row = row_of(s, layer);
    std::set<std::size_t> copied;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (rec.tags.at(j).kind == PositionTag::Kind::kCopy) copied.insert(rec.tags[j].patch);
    }
    if (copied.empty()) continue;
    double a = 0.0, b = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      const PositionTag& t = rec.tags[j];
      if (t.kind == PositionTag::Kind::kImage && copied.count(t.patch)) a += row[j];
      if (t.kind == PositionTag::Kind::kCopy) b += row[j];
    }
    out.input.steps.push_back(s.step);
    out.input.values.push_back(a);
    out.copy.steps.push_back(s.step);
    out.copy.values.push_back(b);
  }
  return out;
}

DecaySeries decay_series(const AttentionRecord& rec, std::span<const std::size_t> bbox_patches) {
  DecaySeries out;
  for (std::size_t l = 0; l < rec.layer_count; ++l) {
    out.cumulative.push_back(cumulative_image_attention(rec, l));
    if (!bbox_patches.empty()) out.ratio.push_back(bbox_attention_ratio(rec, l, bbox_patches));
  }
  return out;
}

}  // namespace pointcopy
