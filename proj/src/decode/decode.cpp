#include "pointcopy/decode/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pointcopy/data/vocab.hpp"
#include "pointcopy/error.hpp"
#include "pointcopy/numerics/rowops.hpp"

namespace pointcopy {

std::size_t copy_budget(double ratio, std::size_t text_count) {
  const double raw = ratio * static_cast<double>(std::max<std::size_t>(text_count, 1));
  // Guard against ratio * n landing a hair above an integer.
  return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

void apply_pointer_mask(std::span<double> ptr_logits, std::span<const std::size_t> copy_counts,
                        std::size_t text_count, std::size_t copied_count, const DecodeConfig& cfg) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const bool budget_left = copied_count + 1 <= copy_budget(cfg.copy_budget_ratio, text_count);
  for (std::size_t k = 0; k < ptr_logits.size(); ++k) {
    if (!cfg.pointing || !budget_left || copy_counts[k] >= cfg.max_copies_per_patch) ptr_logits[k] = kNegInf;
  }
}

struct DecodeAccess {
  // Runs one new position through every layer, updating the KV caches,
  // last hidden state and last attention rows.
  static void append(const Model& model, DecodeState& s, SeqElement e) {
    const ModelConfig& c = model.config();
    const std::size_t t = s.seq_.size();
    if (t >= c.max_seq) throw InputError("decode sequence exceeds max_seq " + std::to_string(c.max_seq));
    const std::size_t D = c.dim;
    const std::size_t H = c.heads;
    const std::size_t dh = c.head_dim();
    const double sc = 1.0 / std::sqrt(static_cast<double>(dh));

    auto x = s.inputs_.row(t);
    if (e.kind == SeqElement::Kind::kText) {
      if (e.index >= c.vocab) throw InputError("token id outside the vocabulary");
      std::copy_n(model.tok_emb().row(e.index).begin(), D, x.begin());
    } else {
      if (e.index >= s.cache_.size()) throw InputError("patch index outside the image");
      std::copy_n(s.cache_.values.row(e.index).begin(), D, x.begin());
    }
    const auto pos = model.pos_emb().row(t);
    for (std::size_t j = 0; j < D; ++j) x[j] += pos[j];
    s.seq_.elements.push_back(e);

    std::vector<double> h(x.begin(), x.end());
    std::vector<double> a(D), q(D), att(D), o(D), m(D), f1(4 * D), f2(D), probs(t + 1);
    for (std::size_t l = 0; l < c.layers; ++l) {
      const auto b = model.block(l);
      rowops::layernorm(h, b.ln1_g.row(0), b.ln1_b.row(0), a);
      rowops::linear(a, b.wq, nullptr, q);
      rowops::linear(a, b.wk, nullptr, s.k_cache_[l].row(t));
      rowops::linear(a, b.wv, nullptr, s.v_cache_[l].row(t));
      auto& avg = s.last_attention_[l];
      avg.assign(t + 1, 0.0);
      for (std::size_t hd = 0; hd < H; ++hd) {
        rowops::attend(std::span<const double>(q).subspan(hd * dh, dh), s.k_cache_[l].data() + hd * dh,
                       s.v_cache_[l].data() + hd * dh, D, t + 1, sc, probs,
                       std::span<double>(att).subspan(hd * dh, dh));
        for (std::size_t j = 0; j <= t; ++j) avg[j] += probs[j];
      }
      for (double& v : avg) v /= static_cast<double>(H);
      rowops::linear(att, b.wo, nullptr, o);
      for (std::size_t j = 0; j < D; ++j) h[j] = h[j] + o[j];
      rowops::layernorm(h, b.ln2_g.row(0), b.ln2_b.row(0), m);
      rowops::linear(m, b.w1, &b.b1, f1);
      for (double& v : f1) v = rowops::gelu(v);
      rowops::linear(f1, b.w2, &b.b2, f2);
      for (std::size_t j = 0; j < D; ++j) h[j] = h[j] + f2[j];
    }
    rowops::layernorm(h, model.lnf_g().row(0), model.lnf_b().row(0), s.hidden_);

    switch (e.kind) {
      case SeqElement::Kind::kText: s.record_.tags.push_back(PositionTag::text()); break;
      case SeqElement::Kind::kPatch: s.record_.tags.push_back(PositionTag::image(e.index)); break;
      case SeqElement::Kind::kCopiedPatch: s.record_.tags.push_back(PositionTag::copy(e.index)); break;
    }
  }

  static std::mt19937_64& rng(DecodeState& s) { return s.rng_; }

  static AugLogits logits(const Model& model, const DecodeState& s) {
    AugLogits out;
    out.gen.resize(model.config().vocab);
    rowops::linear(s.hidden_, model.lm_w(), &model.lm_b(), out.gen);
    out.ptr = pointer_logits_from_keys(s.hidden_, s.cache_.keys, model.ptr_query());
    return out;
  }

  static void record_step(DecodeState& s, const DecodeConfig& cfg) {
    if (!cfg.record_attention) return;
    s.record_.steps.push_back({s.step_, s.last_attention_});
  }

  static void commit(const Model& model, DecodeState& s, AugToken tok) {
    if (tok.is_ptr() && tok.index() >= s.cache_.size()) throw InputError("pointer outside the image");
    s.committed_.push_back(tok);
    ++s.step_;
    if (tok.is_ptr()) {
      ++s.copied_count_;
      ++s.cache_.copy_counts[tok.index()];
    } else {
      ++s.text_count_;
      if (tok.index() == vocab::kEos) {
        s.finished_ = true;
        return;
      }
    }
    if (s.seq_.size() >= model.config().max_seq) {
      s.finished_ = true;
      return;
    }
    append(model, s, tok.is_ptr() ? SeqElement::copied(tok.index())
                                  : SeqElement::text(static_cast<TokenId>(tok.index())));
  }
};

DecodeState init_decode(const Model& model, std::span<const TokenId> prompt, const PatchSet& patches,
                        const DecodeConfig& cfg) {
  const ModelConfig& c = model.config();
  const std::size_t K = patches.size();
  if (prompt.empty()) throw InputError("decode needs a non-empty prompt");
  if (K + prompt.size() > c.max_seq) {
    throw InputError("prompt and image need " + std::to_string(K + prompt.size()) + " positions, max_seq is " +
                     std::to_string(c.max_seq));
  }
  if (K && patches.vectors.cols() != c.patch_features) {
    throw InputError("patch feature width does not match the model");
  }
  DecodeState s;
  s.rng_.seed(cfg.seed);
  s.k_cache_.assign(c.layers, Tensor2(c.max_seq, c.dim));
  s.v_cache_.assign(c.layers, Tensor2(c.max_seq, c.dim));
  s.inputs_ = Tensor2(c.max_seq, c.dim);
  s.hidden_.assign(c.dim, 0.0);
  s.last_attention_.assign(c.layers, {});
  s.record_.layer_count = c.layers;

  s.cache_.values = Tensor2(K, c.dim);
  for (std::size_t k = 0; k < K; ++k) {
    rowops::linear(patches.vectors.row(k), model.patch_w(), &model.patch_b(), s.cache_.values.row(k));
  }
  s.cache_.keys = pointer_keys(s.cache_.values, model.ptr_key());
  s.cache_.copy_counts.assign(K, 0);

  for (std::size_t k = 0; k < K; ++k) DecodeAccess::append(model, s, SeqElement::patch(k));
  for (TokenId id : prompt) DecodeAccess::append(model, s, SeqElement::text(id));
  return s;
}

StepOutput step(const Model& model, DecodeState& state, const DecodeConfig& cfg) {
  if (state.finished()) throw InputError("step() on a finished decode");
  StepOutput out;
  out.logits = DecodeAccess::logits(model, state);
  apply_pointer_mask(out.logits.ptr, state.pointer_cache().copy_counts, state.text_count(), state.copied_count(),
                     cfg);
  out.dist = augmented_distribution(out.logits);
  out.token = select(out.dist, model.config().vocab, cfg.policy, DecodeAccess::rng(state));
  DecodeAccess::record_step(state, cfg);
  DecodeAccess::commit(model, state, out.token);
  return out;
}

void commit(const Model& model, DecodeState& state, AugToken token, const DecodeConfig& cfg) {
  if (state.finished()) throw InputError("commit() on a finished decode");
  DecodeAccess::record_step(state, cfg);
  DecodeAccess::commit(model, state, token);
}

DecodeResult decode(const Model& model, std::span<const TokenId> prompt, const PatchSet& patches,
                    const DecodeConfig& cfg) {
  DecodeState state = init_decode(model, prompt, patches, cfg);
  DecodeResult res;
  for (std::size_t i = 0; i < cfg.max_new && !state.finished(); ++i) {
    res.steps.push_back(step(model, state, cfg));
    res.tokens.push_back(res.steps.back().token);
  }
  res.attention = state.attention();
  return res;
}

}  // namespace pointcopy
