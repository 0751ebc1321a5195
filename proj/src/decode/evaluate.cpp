#include "pointcopy/decode/evaluate.hpp"

#include "pointcopy/data/tasks.hpp"
#include "pointcopy/data/vocab.hpp"

namespace pointcopy {
namespace {

std::optional<std::size_t> answer_step(const DecodeResult& res) {
  for (std::size_t i = res.steps.size(); i-- > 0;) {
    const AugToken& t = res.steps[i].token;
    if (t.is_vocab() && t.index() != vocab::kEos) return i;
  }
  if (res.steps.empty()) return std::nullopt;
  return res.steps.size() - 1;
}

}  // namespace

EvalReport evaluate_decoding(const Model& model, std::span<const GroundedTrace> traces, const DecodeConfig& cfg) {
  EvalReport rep;
  for (const GroundedTrace& t : traces) {
    DecodeConfig c = cfg;
    if (c.max_new == 0) c.max_new = t.target.size() + 4;
    const DecodeResult res = decode(model, t.prompt, t.patches, c);
    ++rep.tasks;
    const auto gold = answer_token(t.target);
    if (gold) {
      const auto got = answer_token(res.tokens);
      if (got && *got == *gold) ++rep.answers_exact;
      const auto at = answer_step(res);
      const auto choices = answer_choices(*gold);
      if (at && !choices.empty()) {
        const auto& gen = res.steps[*at].logits.gen;
        TokenId best = choices.front();
        for (TokenId ch : choices) {
          if (gen[ch] > gen[best]) best = ch;
        }
        if (best == *gold) ++rep.answers_correct;
      }
    }
    for (std::size_t j = 0; j < t.target.size(); ++j) {
      if (!t.target[j].is_ptr()) continue;
      ++rep.ptr_total;
      if (j < res.tokens.size() && res.tokens[j] == t.target[j]) ++rep.ptr_correct;
    }
  }
  return rep;
}

}  // namespace pointcopy
