#pragma once

// Incremental point-and-copy decoding.
//
// The prompt and image are encoded once into per-layer key/value caches. A
// pointer cache holds L_k(c) for every patch (keys) and the projected patch
// vectors c (values). When a step selects Ptr(k), the next position's input
// is values[k] plus its positional embedding.
//
// Revisit suppression: a patch copied max_copies_per_patch times is masked,
// and a copy is only allowed while
//   copied + 1 <= ceil(copy_budget_ratio * max(text, 1)).
// Masking sets pointer logits to -inf; disabling pointing masks all of them.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pointcopy/analysis/attention_record.hpp"
#include "pointcopy/data/patch_set.hpp"
#include "pointcopy/model/model.hpp"
#include "pointcopy/pointer/pointer.hpp"

namespace pointcopy {

struct DecodeConfig {
  std::size_t max_new = 16;
  SelectPolicy policy;
  std::uint64_t seed = 0;
  double copy_budget_ratio = 0.6;
  std::size_t max_copies_per_patch = 2;
  bool pointing = true;
  bool record_attention = false;
};

// Largest copied-token count allowed after `text_count` text tokens.
std::size_t copy_budget(double ratio, std::size_t text_count);

// Sets masked pointer logits to -inf in place.
void apply_pointer_mask(std::span<double> ptr_logits, std::span<const std::size_t> copy_counts,
                        std::size_t text_count, std::size_t copied_count, const DecodeConfig& cfg);

struct PointerCache {
  Tensor2 keys;    // K x D, L_k(c)
  Tensor2 values;  // K x D, c
  std::vector<std::size_t> copy_counts;

  std::size_t size() const noexcept { return keys.rows(); }
};

class DecodeState {
 public:
  const std::vector<AugToken>& committed() const noexcept { return committed_; }
  const PointerCache& pointer_cache() const noexcept { return cache_; }
  const MixedSequence& sequence() const noexcept { return seq_; }
  std::size_t text_count() const noexcept { return text_count_; }
  std::size_t copied_count() const noexcept { return copied_count_; }
  bool finished() const noexcept { return finished_; }
  // Final-layer hidden state of the most recent position.
  std::span<const double> last_hidden() const noexcept { return hidden_; }
  // Input embedding (token or copied patch plus position) of position t.
  std::span<const double> input_embedding(std::size_t t) const { return inputs_.row(t); }
  const AttentionRecord& attention() const noexcept { return record_; }

 private:
  friend DecodeState init_decode(const Model&, std::span<const TokenId>, const PatchSet&, const DecodeConfig&);
  friend struct DecodeAccess;

  std::vector<AugToken> committed_;
  PointerCache cache_;
  MixedSequence seq_;
  std::vector<Tensor2> k_cache_;  // per layer, max_seq x D
  std::vector<Tensor2> v_cache_;
  Tensor2 inputs_;                // max_seq x D
  std::vector<double> hidden_;
  std::vector<std::vector<double>> last_attention_;  // per layer, head-averaged
  std::size_t text_count_ = 0;
  std::size_t copied_count_ = 0;
  std::size_t step_ = 0;
  bool finished_ = false;
  std::mt19937_64 rng_;
  AttentionRecord record_;
};

// Encodes image then prompt. Throws InputError when the prompt does not fit.
DecodeState init_decode(const Model& model, std::span<const TokenId> prompt, const PatchSet& patches,
                        const DecodeConfig& cfg);

struct StepOutput {
  AugToken token = AugToken::vocab(0);
  AugLogits logits;           // after masking
  std::vector<double> dist;   // softmax over [gen || ptr]
};

// Precondition: !state.finished(). Emits one token and, unless it is <eos>
// or the sequence is full, feeds it back as the next input.
StepOutput step(const Model& model, DecodeState& state, const DecodeConfig& cfg);

// Forces `token` as the next output (teacher forcing / tests); same bookkeeping as step.
void commit(const Model& model, DecodeState& state, AugToken token, const DecodeConfig& cfg);

struct DecodeResult {
  std::vector<AugToken> tokens;
  std::vector<StepOutput> steps;
  AttentionRecord attention;
};

DecodeResult decode(const Model& model, std::span<const TokenId> prompt, const PatchSet& patches,
                    const DecodeConfig& cfg);

// {"t": step, "kind": "vocab"|"ptr", "id": n, "logit_top5": [[global_index, logit], ...]}
std::string transcript_line(std::size_t t, const StepOutput& out);

}  // namespace pointcopy
