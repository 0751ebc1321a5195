#pragma once

// Synthetic grounded reasoning tasks over a grid of coloured cells.
//
// Each cell's colour lives only in its patch vector (an 8-dim code plus
// noise); prompts name cells by row/column tokens. A model that cannot look at
// the referenced patch can do no better than chance.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pointcopy/data/trace.hpp"

namespace pointcopy {

enum class TaskKind { kLookup, kCompare, kCount };

std::string_view task_name(TaskKind kind);
std::optional<TaskKind> parse_task_kind(std::string_view name);

// Trace as produced upstream of filtering: reasoning text with object
// references ("[label]") that still have to be resolved to pointer runs.
//
// Reasoning syntax, whitespace separated:
//   word      vocabulary token by name ("red", "n3", "<region>", "<eos>")
//   [label]   reference to an object in the table; expands to its pointer run
//   <ptrN>    explicit pointer to patch N (may be written back to back)
struct RawTrace {
  std::vector<TokenId> prompt;
  PatchSet patches;
  std::string reasoning;
  std::vector<ObjectEntry> objects;
};

struct TaskOptions {
  GridGeometry grid{4, 4, 16};
  double noise_sigma = 0.1;
};

// Deterministic attribute code for colour c (rows of an 8x8 Hadamard matrix).
std::array<double, kAttributeDim> attribute_code(std::size_t color);

// Nearest colour code to the attribute part of a patch vector.
std::size_t decode_color(std::span<const double> patch_vector);

RawTrace synthesize_raw(std::uint64_t seed, const TaskOptions& opts, TaskKind kind);

// synthesize_raw followed by filtering; a generated trace always passes.
GroundedTrace synthesize_task(std::uint64_t seed, const TaskOptions& opts, TaskKind kind);

// Gold answer token of a trace: the last vocabulary token before the final <eos>.
std::optional<TokenId> answer_token(std::span<const AugToken> target);

// Every token of the answer class `gold` belongs to: the colours, yes/no, or
// the numbers. Empty for tokens that are not answers.
std::vector<TokenId> answer_choices(TokenId gold);

}  // namespace pointcopy
