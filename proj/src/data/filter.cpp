#include "pointcopy/data/filter.hpp"

#include <algorithm>
#include <set>
#include <variant>
#include <vector>

#include "pointcopy/data/grid.hpp"
#include "pointcopy/data/vocab.hpp"
#include "pointcopy/error.hpp"

namespace pointcopy {

std::string_view reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::kMismatch: return "mismatch";
    case RejectReason::kDuplicateLabel: return "duplicate_label";
    case RejectReason::kTooFewObjects: return "too_few_objects";
    case RejectReason::kIllFormed: return "ill_formed";
  }
  return "?";
}

namespace {

struct Ref {
  std::string label;
};
using Piece = std::variant<AugToken, Ref>;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Throws ParseError on anything that does not tokenize.
std::vector<Piece> tokenize(std::string_view s) {
  std::vector<Piece> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_space(s[i])) {
      ++i;
      continue;
    }
    if (s[i] == '[') {
      const std::size_t end = s.find(']', i);
      if (end == std::string_view::npos) throw ParseError("unterminated object reference");
      const std::string_view label = s.substr(i + 1, end - i - 1);
      if (label.empty()) throw ParseError("empty object reference");
      out.emplace_back(Ref{std::string(label)});
      i = end + 1;
      continue;
    }
    std::size_t end = i;
    if (s[i] == '<') {
      end = s.find('>', i);
      if (end == std::string_view::npos) throw ParseError("unterminated token");
      ++end;
    } else {
      while (end < s.size() && !is_space(s[end]) && s[end] != '<' && s[end] != '[') ++end;
    }
    const std::string_view tok = s.substr(i, end - i);
    if (tok.starts_with("<ptr")) {
      const auto k = parse_pointer_token(tok);
      if (!k) throw ParseError("malformed pointer token '" + std::string(tok) + "'");
      out.emplace_back(AugToken::ptr(*k));
    } else if (const auto id = vocab::lookup(tok)) {
      out.emplace_back(AugToken::vocab(*id));
    } else {
      throw ParseError("unknown word '" + std::string(tok) + "'");
    }
    i = end;
  }
  return out;
}

FilterResult reject(RejectReason r, std::string detail) {
  FilterResult res;
  res.reason = r;
  res.detail = std::move(detail);
  return res;
}

}  // namespace

FilterResult filter_trace(const RawTrace& raw) {
  const std::size_t K = raw.patches.size();
  std::vector<Piece> pieces;
  try {
    pieces = tokenize(raw.reasoning);
  } catch (const ParseError& e) {
    return reject(RejectReason::kIllFormed, e.what());
  }
  if (pieces.empty()) return reject(RejectReason::kIllFormed, "empty reasoning");
  const auto* last = std::get_if<AugToken>(&pieces.back());
  if (!last || *last != AugToken::vocab(vocab::kEos)) {
    return reject(RejectReason::kIllFormed, "reasoning does not end with <eos>");
  }
  for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
    const auto* t = std::get_if<AugToken>(&pieces[i]);
    if (t && *t == AugToken::vocab(vocab::kEos)) return reject(RejectReason::kIllFormed, "<eos> before the end");
  }
  for (const Piece& p : pieces) {
    const auto* t = std::get_if<AugToken>(&p);
    if (t && t->is_ptr() && t->index() >= K) {
      return reject(RejectReason::kIllFormed,
                    "pointer " + std::to_string(t->index()) + " outside image of " + std::to_string(K) + " patches");
    }
  }
  for (const ObjectEntry& o : raw.objects) {
    try {
      validate_bbox(o.bbox, raw.patches.grid);
    } catch (const InputError& e) {
      return reject(RejectReason::kIllFormed, "object '" + o.label + "': " + e.what());
    }
  }

  std::set<std::string> labels;
  for (const ObjectEntry& o : raw.objects) {
    if (!labels.insert(o.label).second) return reject(RejectReason::kDuplicateLabel, "label '" + o.label + "'");
  }
  if (raw.objects.size() <= 2) {
    return reject(RejectReason::kTooFewObjects, std::to_string(raw.objects.size()) + " objects");
  }

  GroundedTrace out;
  out.prompt = raw.prompt;
  out.patches = raw.patches;
  out.objects = raw.objects;
  for (const Piece& p : pieces) {
    if (const auto* t = std::get_if<AugToken>(&p)) {
      out.target.push_back(*t);
      continue;
    }
    const std::string& label = std::get<Ref>(p).label;
    const auto it = std::find_if(raw.objects.begin(), raw.objects.end(),
                                 [&](const ObjectEntry& o) { return o.label == label; });
    if (it == raw.objects.end()) {
      return reject(RejectReason::kMismatch, "reference [" + label + "] has no object in the table");
    }
    for (std::size_t k : bbox_to_patch_indices(it->bbox, raw.patches.grid)) out.target.push_back(AugToken::ptr(k));
  }
  FilterResult res;
  res.kept = std::move(out);
  return res;
}

}  // namespace pointcopy
