#pragma once

// Hand-built model whose middle-layer attention, at the last prompt
// position, concentrates on the patch named by the prompt's row and column
// tokens.
//
// Layer 0: the last position attends to the row/column tokens and copies
// their codes (dims 20..35) into its residual stream.
// Layer 1: that code becomes a query against the patches' own row/column
// one-hots (dims 0..15), so the patch matching both wins.

#include "pointcopy/data/vocab.hpp"
#include "pointcopy/model/model.hpp"

namespace pointcopy::planted {

inline ModelConfig config() {
  ModelConfig c;
  c.layers = 2;
  c.dim = 64;
  c.heads = 1;
  c.max_seq = 80;
  return c;
}

inline Model model(double sharpness = 4.0) {
  const ModelConfig c = config();
  Model m(c, 0);
  for (Param& p : m.params()) {
    if (p.name.find(".g") != std::string::npos && p.name.find("ln") != std::string::npos) {
      p.value.fill(1.0);
    } else {
      p.value.fill(0.0);
    }
  }
  Tensor2& tok = m.param("tok_emb").value;
  for (std::size_t r = 0; r < kMaxGridSide; ++r) {
    tok(vocab::row(r), 20 + r) = 1.0;
    tok(vocab::row(r), 17) = 1.0;
    tok(vocab::col(r), 28 + r) = 1.0;
    tok(vocab::col(r), 17) = 1.0;
  }
  for (TokenId t = 0; t < c.vocab; ++t) {
    bool any = false;
    for (std::size_t j = 0; j < c.dim; ++j) any = any || tok(t, j) != 0.0;
    if (!any) tok(t, 19) = 1.0;
  }
  tok(vocab::kQuery, 19) = 0.0;
  tok(vocab::kQuery, 18) = 1.0;

  Tensor2& pw = m.param("patch_proj.w").value;
  for (std::size_t i = 0; i < 2 * kMaxGridSide; ++i) pw(kAttributeDim + i, i) = 1.0;
  m.param("patch_proj.b").value(0, 16) = 1.0;

  Tensor2& wq0 = m.param("block0.attn.wq").value;
  Tensor2& wk0 = m.param("block0.attn.wk").value;
  Tensor2& wv0 = m.param("block0.attn.wv").value;
  Tensor2& wo0 = m.param("block0.attn.wo").value;
  wq0(18, 0) = sharpness;
  wk0(17, 0) = 1.0;
  for (std::size_t i = 20; i < 36; ++i) {
    wv0(i, i) = 1.0;
    wo0(i, i) = 1.0;
  }

  Tensor2& wq1 = m.param("block1.attn.wq").value;
  Tensor2& wk1 = m.param("block1.attn.wk").value;
  for (std::size_t i = 0; i < 16; ++i) {
    wq1(20 + i, i) = sharpness;
    wk1(i, i) = 1.0;
  }
  return m;
}

inline std::vector<TokenId> description(std::size_t row, std::size_t col) {
  return {vocab::kBos, vocab::kLookup, vocab::row(row), vocab::col(col), vocab::kQuery};
}

inline std::vector<TokenId> baseline() { return {vocab::kBos, vocab::kLookup, vocab::kQuery}; }

}  // namespace pointcopy::planted
