#pragma once

// Pointing over continuous patch embeddings.
//
// The output space is the vocabulary followed by the K patches of the current
// image: global index i < |V| is vocabulary token i, global index |V| + k is a
// pointer to patch k. Both halves share one softmax; there is no mixing gate.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pointcopy/numerics/autodiff.hpp"
#include "pointcopy/numerics/tensor.hpp"

namespace pointcopy {

using TokenId = std::uint32_t;

// A decoded symbol: a vocabulary token or a pointer to patch k.
class AugToken {
 public:
  static constexpr AugToken vocab(TokenId id) { return AugToken(false, id); }
  static constexpr AugToken ptr(std::size_t k) { return AugToken(true, static_cast<std::uint32_t>(k)); }
  static AugToken from_global(std::size_t index, std::size_t vocab_size) {
    return index < vocab_size ? vocab(static_cast<TokenId>(index)) : ptr(index - vocab_size);
  }

  constexpr bool is_ptr() const noexcept { return is_ptr_; }
  constexpr bool is_vocab() const noexcept { return !is_ptr_; }
  // Token id for vocab tokens, patch index for pointers.
  constexpr std::size_t index() const noexcept { return index_; }
  constexpr std::size_t global_index(std::size_t vocab_size) const noexcept {
    return is_ptr_ ? vocab_size + index_ : index_;
  }

  std::string debug_string() const;

  friend constexpr bool operator==(const AugToken&, const AugToken&) = default;

 private:
  constexpr AugToken(bool p, std::uint32_t i) : is_ptr_(p), index_(i) {}
  bool is_ptr_;
  std::uint32_t index_;
};

struct AugLogits {
  std::vector<double> gen;  // |V|
  std::vector<double> ptr;  // K

  // [gen || ptr]
  std::vector<double> concatenated() const;
};

// Pointer query/key projections, both D x D and bias-free.
struct PointerHead {
  const Tensor2& query;
  const Tensor2& key;
};

// keys[k] = c_k L_k
Tensor2 pointer_keys(const Tensor2& patches, const Tensor2& key_proj);

// logit[k] = <h L_q, c_k L_k> / sqrt(D). `patches` is K x D; K may be 0.
std::vector<double> pointer_logits(std::span<const double> hidden, const Tensor2& patches,
                                   const PointerHead& head);
// Same, with precomputed keys.
std::vector<double> pointer_logits_from_keys(std::span<const double> hidden, const Tensor2& keys,
                                             const Tensor2& query_proj);

// Softmax over [gen || ptr].
std::vector<double> augmented_distribution(const AugLogits& logits);

// lambda * softmax(gen) on the vocabulary slots, (1 - lambda) * softmax(ptr)
// on the pointer slots. Reference formulation for tests; not used in training.
std::vector<double> gated_mixture_reference(std::span<const double> gen, std::span<const double> ptr,
                                            double lambda);

struct ZLossConfig {
  std::size_t k = 40;
  double lambda = 1e-5;
  // false: lambda * log Zbar;  true: lambda * (log Zbar)^2
  bool squared = false;
};

// Indices of the k largest values (k clipped to size), ties to the lower index.
std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k);
// log of the partition restricted to the top-k entries.
double top_k_log_partition(std::span<const double> logits, std::size_t k);
double zloss(std::span<const double> logits, const ZLossConfig& cfg = {});

struct SelectPolicy {
  enum class Kind { kArgmax, kSample };
  Kind kind = Kind::kArgmax;
  double temperature = 1.0;
};

// Picks a global index from a probability vector. Argmax ties go to the lowest
// index; sampling draws from dist^(1/temperature), renormalised, using `rng`.
AugToken select(std::span<const double> dist, std::size_t vocab_size, const SelectPolicy& policy,
                std::mt19937_64& rng);

// Graph versions used by the training loss.
namespace ad_ops {

// N x K pointer logits from hidden rows (N x D) and patch embeddings (K x D).
ad::Var pointer_logits(ad::Graph& g, ad::Var hidden, ad::Var patches, ad::Var query_proj,
                       ad::Var key_proj);
// 1x1: sum over rows of -log softmax(logits_i)[gold_i]
ad::Var augmented_nll_sum(ad::Graph& g, ad::Var logits, std::span<const std::size_t> gold);
// 1x1: sum over rows of zloss(logits_i)
ad::Var zloss_sum(ad::Graph& g, ad::Var logits, const ZLossConfig& cfg);

}  // namespace ad_ops

}  // namespace pointcopy
