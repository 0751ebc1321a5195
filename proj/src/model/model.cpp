#include "pointcopy/model/model.hpp"

#include <cmath>
#include <map>
#include <random>
#include <string>

#include "pointcopy/error.hpp"
#include "pointcopy/numerics/rowops.hpp"

namespace pointcopy {

void ModelConfig::validate() const {
  if (layers == 0) throw InputError("model needs at least one layer");
  if (dim == 0 || heads == 0 || dim % heads != 0) {
    throw InputError("model dim " + std::to_string(dim) + " must be divisible by heads " +
                     std::to_string(heads));
  }
  if (vocab == 0) throw InputError("vocabulary must not be empty");
  if (max_seq == 0) throw InputError("max_seq must be positive");
  if (patch_features == 0) throw InputError("patch_features must be positive");
}

MixedSequence image_then_prompt(std::size_t patch_count, std::span<const TokenId> prompt) {
  MixedSequence seq;
  seq.elements.reserve(patch_count + prompt.size());
  for (std::size_t k = 0; k < patch_count; ++k) seq.elements.push_back(SeqElement::patch(k));
  for (TokenId id : prompt) seq.elements.push_back(SeqElement::text(id));
  return seq;
}

namespace {

std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> layout(const ModelConfig& c) {
  const std::size_t D = c.dim;
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> out{
      {"tok_emb", {c.vocab, D}},
      {"pos_emb", {c.max_seq, D}},
      {"patch_proj.w", {c.patch_features, D}},
      {"patch_proj.b", {1, D}},
  };
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    out.insert(out.end(), {{p + "ln1.g", {1, D}},
                           {p + "ln1.b", {1, D}},
                           {p + "attn.wq", {D, D}},
                           {p + "attn.wk", {D, D}},
                           {p + "attn.wv", {D, D}},
                           {p + "attn.wo", {D, D}},
                           {p + "ln2.g", {1, D}},
                           {p + "ln2.b", {1, D}},
                           {p + "mlp.w1", {D, 4 * D}},
                           {p + "mlp.b1", {1, 4 * D}},
                           {p + "mlp.w2", {4 * D, D}},
                           {p + "mlp.b2", {1, D}}});
  }
  out.insert(out.end(), {{"lnf.g", {1, D}},
                         {"lnf.b", {1, D}},
                         {"lm_head.w", {D, c.vocab}},
                         {"lm_head.b", {1, c.vocab}},
                         {"ptr.query", {D, D}},
                         {"ptr.key", {D, D}}});
  return out;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Model::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  for (auto& [name, shape] : layout(config_)) params_.emplace_back(name, Tensor2(shape.first, shape.second));
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : Model(config) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double base = 0.02;
  const double resid = base / std::sqrt(2.0 * static_cast<double>(config_.layers));
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(config_.dim));
  for (Param& p : params_) {
    const std::string& n = p.name;
    if (n == "ptr.query" || n == "ptr.key") {
      p.value = Tensor2::identity(config_.dim, inv_sqrt_d);
    } else if (ends_with(n, ".g")) {
      p.value.fill(1.0);
    } else if (ends_with(n, ".b") || ends_with(n, ".b1") || ends_with(n, ".b2")) {
      p.value.fill(0.0);
    } else {
      const double sd = (ends_with(n, "attn.wo") || ends_with(n, "mlp.w2")) ? resid : base;
      for (double& v : p.value.flat()) v = sd * normal(rng);
    }
  }
}

Model Model::from_records(const ModelConfig& config, const std::vector<NamedTensor>& records) {
  Model m(config);
  std::map<std::string, const Tensor2*> by_name;
  for (const auto& r : records) by_name[r.name] = &r.value;
  for (Param& p : m.params_) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw DimensionError("checkpoint lacks parameter '" + p.name + "'");
    if (!it->second->same_shape(p.value)) {
      throw DimensionError("parameter '" + p.name + "' has shape " + it->second->shape_string() +
                           ", config expects " + p.value.shape_string());
    }
    p.value = *it->second;
  }
  return m;
}

Param& Model::param(std::string_view name) {
  for (Param& p : params_) {
    if (p.name == name) return p;
  }
  throw InputError("no parameter named '" + std::string(name) + "'");
}

const Param& Model::param(std::string_view name) const {
  return const_cast<Model*>(this)->param(name);
}

std::vector<NamedTensor> Model::records() const {
  std::vector<NamedTensor> out;
  out.reserve(params_.size());
  for (const Param& p : params_) out.push_back({p.name, p.value});
  return out;
}

void Model::zero_grad() {
  for (Param& p : params_) p.zero_grad();
}

namespace {

template <typename BindFn>
Model::Bound bind_all(const ModelConfig& c, BindFn&& b) {
  Model::Bound out;
  std::size_t i = 0;
  out.tok_emb = b(i++);
  out.pos_emb = b(i++);
  out.patch_w = b(i++);
  out.patch_b = b(i++);
  for (std::size_t l = 0; l < c.layers; ++l) {
    Model::Bound::Block blk;
    blk.ln1_g = b(i++);
    blk.ln1_b = b(i++);
    blk.wq = b(i++);
    blk.wk = b(i++);
    blk.wv = b(i++);
    blk.wo = b(i++);
    blk.ln2_g = b(i++);
    blk.ln2_b = b(i++);
    blk.w1 = b(i++);
    blk.b1 = b(i++);
    blk.w2 = b(i++);
    blk.b2 = b(i++);
    out.blocks.push_back(blk);
  }
  out.lnf_g = b(i++);
  out.lnf_b = b(i++);
  out.lm_w = b(i++);
  out.lm_b = b(i++);
  out.ptr_q = b(i++);
  out.ptr_k = b(i++);
  return out;
}

}  // namespace

Model::Bound Model::bind(ad::Graph& g) {
  return bind_all(config_, [&](std::size_t i) { return g.param(params_[i]); });
}

Model::Bound Model::bind_const(ad::Graph& g) const {
  return bind_all(config_, [&](std::size_t i) { return g.constant_ref(params_[i].value); });
}

Model::BlockRef Model::block(std::size_t layer) const {
  const std::size_t o = 4 + 12 * layer;
  const auto& P = params_;
  return {P[o].value,     P[o + 1].value, P[o + 2].value, P[o + 3].value,
          P[o + 4].value, P[o + 5].value, P[o + 6].value, P[o + 7].value,
          P[o + 8].value, P[o + 9].value, P[o + 10].value, P[o + 11].value};
}

const Tensor2& Model::lnf_g() const { return params_[tail_index(0)].value; }
const Tensor2& Model::lnf_b() const { return params_[tail_index(1)].value; }
const Tensor2& Model::lm_w() const { return params_[tail_index(2)].value; }
const Tensor2& Model::lm_b() const { return params_[tail_index(3)].value; }
const Tensor2& Model::ptr_query() const { return params_[tail_index(4)].value; }
const Tensor2& Model::ptr_key() const { return params_[tail_index(5)].value; }

void validate_sequence(const ModelConfig& config, const MixedSequence& seq, const PatchSet& patches) {
  if (seq.size() > config.max_seq) {
    throw InputError("sequence length " + std::to_string(seq.size()) + " exceeds max_seq " +
                     std::to_string(config.max_seq));
  }
  if (patches.size() && patches.vectors.cols() != config.patch_features) {
    throw InputError("patch feature width " + std::to_string(patches.vectors.cols()) +
                     " does not match model (" + std::to_string(config.patch_features) + ")");
  }
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const SeqElement& e = seq.elements[t];
    if (e.kind == SeqElement::Kind::kText) {
      if (e.index >= config.vocab) {
        throw InputError("token id " + std::to_string(e.index) + " at position " + std::to_string(t) +
                         " is outside the vocabulary");
      }
    } else if (e.index >= patches.size()) {
      throw InputError("patch index " + std::to_string(e.index) + " at position " + std::to_string(t) +
                       " is outside the image (K=" + std::to_string(patches.size()) + ")");
    }
  }
}

GraphForward build_forward(ad::Graph& g, const Model::Bound& p, const ModelConfig& config,
                           const MixedSequence& seq, const PatchSet& patches,
                           std::vector<std::vector<Tensor2>>* attention) {
  validate_sequence(config, seq, patches);
  const std::size_t T = seq.size();
  const std::size_t K = patches.size();
  GraphForward out;

  ad::Var table = p.tok_emb;
  if (K > 0) {
    ad::Var raw = g.constant_ref(patches.vectors);
    out.patch_emb = ad::linear(g, raw, p.patch_w, p.patch_b);
    table = ad::concat_rows(g, p.tok_emb, out.patch_emb);
  } else {
    out.patch_emb = g.constant(Tensor2(0, config.dim));
  }
  std::vector<std::size_t> rows(T), positions(T);
  for (std::size_t t = 0; t < T; ++t) {
    const SeqElement& e = seq.elements[t];
    rows[t] = e.kind == SeqElement::Kind::kText ? e.index : config.vocab + e.index;
    positions[t] = t;
  }
  ad::Var x = ad::add(g, ad::gather_rows(g, table, rows), ad::gather_rows(g, p.pos_emb, positions));

  if (attention) attention->assign(config.layers, {});
  for (std::size_t l = 0; l < config.layers; ++l) {
    const auto& b = p.blocks[l];
    ad::Var a = ad::layernorm(g, x, b.ln1_g, b.ln1_b);
    ad::Var q = ad::linear(g, a, b.wq);
    ad::Var k = ad::linear(g, a, b.wk);
    ad::Var v = ad::linear(g, a, b.wv);
    ad::Var att = ad::causal_attention(g, q, k, v, config.heads, attention ? &(*attention)[l] : nullptr);
    x = ad::add(g, x, ad::linear(g, att, b.wo));
    ad::Var m = ad::layernorm(g, x, b.ln2_g, b.ln2_b);
    ad::Var h = ad::gelu(g, ad::linear(g, m, b.w1, b.b1));
    x = ad::add(g, x, ad::linear(g, h, b.w2, b.b2));
    out.layer_outputs.push_back(x);
  }
  out.hidden = ad::layernorm(g, x, p.lnf_g, p.lnf_b);
  return out;
}

HiddenStates forward(const Model& model, const MixedSequence& seq, const PatchSet& patches,
                     bool record_attention) {
  ad::Graph g;
  const auto bound = model.bind_const(g);
  HiddenStates hs;
  const GraphForward f =
      build_forward(g, bound, model.config(), seq, patches, record_attention ? &hs.attention : nullptr);
  hs.final = g.value(f.hidden);
  for (ad::Var v : f.layer_outputs) hs.layers.push_back(g.value(v));
  hs.patch_embeddings = g.value(f.patch_emb);
  return hs;
}

Tensor2 embed_mixed(const Model& model, const MixedSequence& seq, const PatchSet& patches) {
  const ModelConfig& c = model.config();
  validate_sequence(c, seq, patches);
  Tensor2 out(seq.size(), c.dim);
  std::vector<double> proj(c.dim);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    const SeqElement& e = seq.elements[t];
    auto row = out.row(t);
    if (e.kind == SeqElement::Kind::kText) {
      std::copy_n(model.tok_emb().row(e.index).begin(), c.dim, row.begin());
    } else {
      rowops::linear(patches.vectors.row(e.index), model.patch_w(), &model.patch_b(), row);
    }
    const auto pos = model.pos_emb().row(t);
    for (std::size_t j = 0; j < c.dim; ++j) row[j] += pos[j];
  }
  return out;
}

}  // namespace pointcopy
