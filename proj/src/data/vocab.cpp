#include "pointcopy/data/vocab.hpp"

#include <array>
#include <string>

namespace pointcopy::vocab {
namespace {

const std::array<std::string, kSize>& names() {
  static const std::array<std::string, kSize> table = [] {
    std::array<std::string, kSize> t;
    t[kEos] = "<eos>";
    t[kPad] = "<pad>";
    t[kBos] = "<bos>";
    t[kRegion] = "<region>";
    t[kQuery] = "?";
    t[kLookup] = "lookup";
    t[kCompare] = "compare";
    t[kCount] = "count";
    for (std::size_t i = 0; i < kMaxGridSide; ++i) {
      t[row(i)] = "row" + std::to_string(i);
      t[col(i)] = "col" + std::to_string(i);
    }
    const std::array<const char*, kNumColors> colors{"red", "green", "blue", "yellow"};
    for (std::size_t i = 0; i < kNumColors; ++i) t[color(i)] = colors[i];
    t[kYes] = "yes";
    t[kNo] = "no";
    for (std::size_t n = 0; n <= kMaxGridSide; ++n) t[number(n)] = "n" + std::to_string(n);
    return t;
  }();
  return table;
}

}  // namespace

std::string_view name(TokenId id) { return id < kSize ? std::string_view(names()[id]) : "<unk>"; }

std::optional<TokenId> lookup(std::string_view s) {
  const auto& t = names();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == s) return static_cast<TokenId>(i);
  }
  return std::nullopt;
}

}  // namespace pointcopy::vocab
