#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "pointcopy/data/tasks.hpp"
#include "pointcopy/data/trace.hpp"

namespace pointcopy {

enum class RejectReason { kMismatch, kDuplicateLabel, kTooFewObjects, kIllFormed };

std::string_view reason_name(RejectReason r);

struct FilterResult {
  std::optional<GroundedTrace> kept;
  std::optional<RejectReason> reason;
  std::string detail;

  bool keep() const noexcept { return kept.has_value(); }
};

// Checks, in order: ill-formed reasoning (unknown words, malformed or
// out-of-range pointers, invalid boxes, missing final <eos>), duplicate
// object labels, too few objects (<= 2), and references to labels that are
// not in the object table. On success the references are expanded into
// row-major pointer runs.
FilterResult filter_trace(const RawTrace& raw);

}  // namespace pointcopy
