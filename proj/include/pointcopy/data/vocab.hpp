#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "pointcopy/data/patch_set.hpp"
#include "pointcopy/pointer/pointer.hpp"

// Fixed vocabulary shared by the task generator, the model and the CLI.
namespace pointcopy::vocab {

inline constexpr TokenId kEos = 0;
inline constexpr TokenId kPad = 1;
inline constexpr TokenId kBos = 2;
inline constexpr TokenId kRegion = 3;
inline constexpr TokenId kQuery = 4;
inline constexpr TokenId kLookup = 5;
inline constexpr TokenId kCompare = 6;
inline constexpr TokenId kCount = 7;
inline constexpr TokenId kRow0 = 8;
inline constexpr TokenId kCol0 = 16;
inline constexpr TokenId kColor0 = 24;
inline constexpr TokenId kYes = 28;
inline constexpr TokenId kNo = 29;
inline constexpr TokenId kNum0 = 30;

inline constexpr std::size_t kNumColors = 4;
inline constexpr std::size_t kSize = kNum0 + kMaxGridSide + 1;

constexpr TokenId row(std::size_t r) { return kRow0 + static_cast<TokenId>(r); }
constexpr TokenId col(std::size_t c) { return kCol0 + static_cast<TokenId>(c); }
constexpr TokenId color(std::size_t c) { return kColor0 + static_cast<TokenId>(c); }
constexpr TokenId number(std::size_t n) { return kNum0 + static_cast<TokenId>(n); }

std::string_view name(TokenId id);
std::optional<TokenId> lookup(std::string_view name);

}  // namespace pointcopy::vocab
