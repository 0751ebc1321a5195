#pragma once

// Filter corpus with planted defects.

#include <optional>
#include <string>
#include <vector>

#include "pointcopy/data/filter.hpp"
#include "pointcopy/data/tasks.hpp"

namespace pointcopy::corpus {

struct Item {
  RawTrace raw;
  std::optional<RejectReason> expected;
};

inline void plant(RawTrace& raw, RejectReason r, std::size_t variant) {
  switch (r) {
    case RejectReason::kMismatch: {
      const auto open = raw.reasoning.find('[');
      const auto close = raw.reasoning.find(']', open);
      raw.reasoning.replace(open, close - open + 1, "[ghost" + std::to_string(variant) + "]");
      break;
    }
    case RejectReason::kDuplicateLabel:
      raw.objects[2].label = raw.objects[variant % 2].label;
      break;
    case RejectReason::kTooFewObjects:
      raw.objects.resize(variant % 2 == 0 ? 2 : 1);
      break;
    case RejectReason::kIllFormed:
      switch (variant % 4) {
        case 0: raw.reasoning += " blorp"; break;
        case 1: raw.reasoning.insert(0, "<ptr999> "); break;
        case 2: raw.reasoning.erase(raw.reasoning.rfind("<eos>")); break;
        default: raw.reasoning.insert(0, "<ptr01> "); break;
      }
      break;
  }
}

// 100 traces over all three task kinds; positions 3, 8, 13, ... carry defects
// in a fixed rotation of 5 mismatch, 5 duplicate_label, 4 too_few_objects and
// 4 ill_formed.
inline std::vector<Item> planted_corpus(std::uint64_t seed) {
  static constexpr TaskKind kinds[] = {TaskKind::kLookup, TaskKind::kCompare, TaskKind::kCount};
  static constexpr RejectReason plan[18] = {
      RejectReason::kMismatch,      RejectReason::kDuplicateLabel, RejectReason::kTooFewObjects,
      RejectReason::kIllFormed,     RejectReason::kMismatch,       RejectReason::kDuplicateLabel,
      RejectReason::kTooFewObjects, RejectReason::kIllFormed,      RejectReason::kMismatch,
      RejectReason::kDuplicateLabel, RejectReason::kTooFewObjects, RejectReason::kIllFormed,
      RejectReason::kMismatch,      RejectReason::kDuplicateLabel, RejectReason::kTooFewObjects,
      RejectReason::kIllFormed,     RejectReason::kMismatch,       RejectReason::kDuplicateLabel};
  TaskOptions opts;
  std::vector<Item> out;
  std::size_t planted = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    Item it{synthesize_raw(seed * 1000 + i, opts, kinds[i % 3]), std::nullopt};
    if (i % 5 == 3 && planted < 18) {
      it.expected = plan[planted];
      plant(it.raw, plan[planted], planted);
      ++planted;
    }
    out.push_back(std::move(it));
  }
  return out;
}

}  // namespace pointcopy::corpus
