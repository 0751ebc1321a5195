#pragma once

// Small pre-norm decoder-only transformer over mixed text/patch sequences.

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "pointcopy/data/patch_set.hpp"
#include "pointcopy/data/vocab.hpp"
#include "pointcopy/numerics/autodiff.hpp"
#include "pointcopy/numerics/checkpoint.hpp"
#include "pointcopy/numerics/tensor.hpp"

namespace pointcopy {

struct ModelConfig {
  std::size_t layers = 2;
  std::size_t dim = 64;
  std::size_t heads = 4;
  std::size_t vocab = vocab::kSize;
  std::size_t max_seq = 64;
  std::size_t patch_features = kPatchFeatures;

  // Throws InputError when an invariant does not hold.
  void validate() const;
  std::size_t head_dim() const { return dim / heads; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct SeqElement {
  enum class Kind { kText, kPatch, kCopiedPatch };
  Kind kind;
  std::size_t index;  // token id, or patch index for the two patch kinds

  static constexpr SeqElement text(TokenId id) { return {Kind::kText, id}; }
  static constexpr SeqElement patch(std::size_t k) { return {Kind::kPatch, k}; }
  static constexpr SeqElement copied(std::size_t k) { return {Kind::kCopiedPatch, k}; }

  friend bool operator==(const SeqElement&, const SeqElement&) = default;
};

// Model input: interleaved text tokens and references into a PatchSet.
struct MixedSequence {
  std::vector<SeqElement> elements;

  std::size_t size() const noexcept { return elements.size(); }
};

// Image patches first, then the prompt: the layout used for training and decoding.
MixedSequence image_then_prompt(std::size_t patch_count, std::span<const TokenId> prompt);

struct HiddenStates {
  Tensor2 final;                     // T x D after the final layer norm (h_t rows)
  std::vector<Tensor2> layers;       // residual stream after each block
  // attention[layer][head] is T x T; empty unless recorded
  std::vector<std::vector<Tensor2>> attention;
  Tensor2 patch_embeddings;          // K x D projected patches (the set C)
};

class Model {
 public:
  // Parameters bound into a graph, in the same layout as the model.
  struct Bound {
    struct Block {
      ad::Var ln1_g, ln1_b, wq, wk, wv, wo, ln2_g, ln2_b, w1, b1, w2, b2;
    };
    ad::Var tok_emb, pos_emb, patch_w, patch_b, lnf_g, lnf_b, lm_w, lm_b, ptr_q, ptr_k;
    std::vector<Block> blocks;
  };

  // Random initialisation; pointer heads start at I / sqrt(D).
  Model(const ModelConfig& config, std::uint64_t seed);
  // Throws DimensionError when a record is missing or has the wrong shape.
  static Model from_records(const ModelConfig& config, const std::vector<NamedTensor>& records);

  const ModelConfig& config() const noexcept { return config_; }
  std::span<Param> params() noexcept { return params_; }
  std::span<const Param> params() const noexcept { return params_; }
  Param& param(std::string_view name);
  const Param& param(std::string_view name) const;
  std::vector<NamedTensor> records() const;
  void zero_grad();

  // Trainable binding (gradients flow into Param::grad) and read-only binding.
  Bound bind(ad::Graph& g);
  Bound bind_const(ad::Graph& g) const;

  // Named views used by the decoder.
  const Tensor2& tok_emb() const { return params_[0].value; }
  const Tensor2& pos_emb() const { return params_[1].value; }
  const Tensor2& patch_w() const { return params_[2].value; }
  const Tensor2& patch_b() const { return params_[3].value; }
  struct BlockRef {
    const Tensor2 &ln1_g, &ln1_b, &wq, &wk, &wv, &wo, &ln2_g, &ln2_b, &w1, &b1, &w2, &b2;
  };
  BlockRef block(std::size_t layer) const;
  const Tensor2& lnf_g() const;
  const Tensor2& lnf_b() const;
  const Tensor2& lm_w() const;
  const Tensor2& lm_b() const;
  const Tensor2& ptr_query() const;
  const Tensor2& ptr_key() const;

 private:
  explicit Model(const ModelConfig& config);
  std::size_t tail_index(std::size_t offset) const { return 4 + 12 * config_.layers + offset; }

  ModelConfig config_;
  std::vector<Param> params_;
};

// Graph outputs of the shared forward pass.
struct GraphForward {
  ad::Var hidden;      // T x D, after final layer norm
  ad::Var patch_emb;   // K x D
  std::vector<ad::Var> layer_outputs;
};

// Checks ids, patch indices and length; throws InputError.
void validate_sequence(const ModelConfig& config, const MixedSequence& seq, const PatchSet& patches);

// Row t of the result is the text embedding or projected patch plus pos(t).
Tensor2 embed_mixed(const Model& model, const MixedSequence& seq, const PatchSet& patches);

GraphForward build_forward(ad::Graph& g, const Model::Bound& p, const ModelConfig& config,
                           const MixedSequence& seq, const PatchSet& patches,
                           std::vector<std::vector<Tensor2>>* attention = nullptr);

HiddenStates forward(const Model& model, const MixedSequence& seq, const PatchSet& patches,
                     bool record_attention = false);

}  // namespace pointcopy
