#include "pointcopy/model/loss.hpp"

#include <algorithm>

#include "pointcopy/error.hpp"

namespace pointcopy {

TraceLayout layout_trace(const GroundedTrace& trace, const ModelConfig& config) {
  if (trace.prompt.empty()) throw InputError("trace has an empty prompt");
  if (trace.target.empty()) throw InputError("trace has an empty target");
  const std::size_t K = trace.patches.size();
  TraceLayout out;
  out.input = image_then_prompt(K, trace.prompt);
  const std::size_t first = out.input.size() - 1;
  for (std::size_t j = 0; j < trace.target.size(); ++j) {
    const AugToken& tok = trace.target[j];
    if (tok.is_ptr() && tok.index() >= K) throw InputError("target pointer outside the image");
    if (tok.is_vocab() && tok.index() >= config.vocab) throw InputError("target token outside the vocabulary");
    out.predict_positions.push_back(first + j);
    out.gold.push_back(tok.global_index(config.vocab));
    if (j + 1 < trace.target.size()) {
      out.input.elements.push_back(tok.is_ptr() ? SeqElement::copied(tok.index())
                                                : SeqElement::text(static_cast<TokenId>(tok.index())));
    }
  }
  if (out.input.size() > config.max_seq) {
    throw InputError("trace needs " + std::to_string(out.input.size()) + " positions, max_seq is " +
                     std::to_string(config.max_seq));
  }
  return out;
}

namespace {

struct TraceTerms {
  ad::Var nll;
  ad::Var z;
  ad::Var logits;
};

TraceTerms trace_terms(ad::Graph& g, const Model::Bound& p, const ModelConfig& config,
                       const GroundedTrace& trace, const TraceLayout& lay, const ZLossConfig& zcfg) {
  const GraphForward f = build_forward(g, p, config, lay.input, trace.patches);
  ad::Var h = ad::gather_rows(g, f.hidden, lay.predict_positions);
  ad::Var gen = ad::linear(g, h, p.lm_w, p.lm_b);
  ad::Var logits = gen;
  if (trace.patches.size() > 0) {
    logits = ad::concat_cols(g, gen, ad_ops::pointer_logits(g, h, f.patch_emb, p.ptr_q, p.ptr_k));
  }
  return {ad_ops::augmented_nll_sum(g, logits, lay.gold), ad_ops::zloss_sum(g, logits, zcfg), logits};
}

template <typename ModelRef>
LossReport run_loss(ModelRef& model, std::span<const GroundedTrace> batch, const ZLossConfig& zcfg,
                    bool accumulate_grads) {
  if (batch.empty()) throw InputError("training_loss: empty batch");
  const ModelConfig& config = model.config();
  std::vector<TraceLayout> layouts;
  layouts.reserve(batch.size());
  std::size_t positions = 0;
  for (const auto& tr : batch) {
    layouts.push_back(layout_trace(tr, config));
    positions += layouts.back().gold.size();
  }
  const double inv = 1.0 / static_cast<double>(positions);

  LossReport rep;
  rep.positions = positions;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    ad::Graph g;
    Model::Bound bound;
    if constexpr (std::is_const_v<ModelRef>) {
      bound = model.bind_const(g);
    } else {
      bound = accumulate_grads ? model.bind(g) : model.bind_const(g);
    }
    const TraceTerms terms = trace_terms(g, bound, config, batch[i], layouts[i], zcfg);
    rep.ce += g.value(terms.nll)(0, 0) * inv;
    rep.zloss += g.value(terms.z)(0, 0) * inv;

    const Tensor2& L = g.value(terms.logits);
    for (std::size_t j = 0; j < layouts[i].gold.size(); ++j) {
      const std::size_t gold = layouts[i].gold[j];
      if (gold < config.vocab) continue;
      ++rep.ptr_total;
      const auto row = L.row(j);
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      if (best == gold) ++rep.ptr_correct;
    }
    if constexpr (!std::is_const_v<ModelRef>) {
      if (accumulate_grads) g.backward(ad::add(g, terms.nll, terms.z), inv);
    }
  }
  rep.total = rep.ce + rep.zloss;
  return rep;
}

}  // namespace

LossReport training_loss(Model& model, std::span<const GroundedTrace> batch, const ZLossConfig& zcfg,
                         bool accumulate_grads) {
  return run_loss(model, batch, zcfg, accumulate_grads);
}

LossReport evaluate_loss(const Model& model, std::span<const GroundedTrace> batch, const ZLossConfig& zcfg) {
  return run_loss(model, batch, zcfg, false);
}

}  // namespace pointcopy
