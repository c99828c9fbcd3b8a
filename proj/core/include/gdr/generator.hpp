#pragma once

#include "gdr/encoder.hpp"
#include "gdr/params.hpp"

namespace gdr {

// One decoder layer of the prototype generator: causal self-attention, then
// persona attention and query attention side by side, then a persona-query
// attention chained from their results, then a feed-forward over the
// elementwise mean of the three attention outputs. Every sublayer is wrapped
// in residual layer norm.
struct DecoderLayerParams {
  AttentionParams self_attn;
  LayerNormParams ln_self;
  AttentionParams persona_attn;
  LayerNormParams ln_persona;
  AttentionParams query_attn;
  LayerNormParams ln_query;
  AttentionParams persona_query_attn;
  LayerNormParams ln_persona_query;
  FfnParams ffn;
  LayerNormParams ln_ffn;
};

struct GeneratorParams {
  Tensor embedding;  // word table shared with the rewriter ("shared.embedding")
  EncoderParams encoder;
  std::vector<DecoderLayerParams> decoder;
  LinearParams out_proj;  // hidden -> vocabulary
  ModelConfig config;
};

// Registers (rng != nullptr) or binds (rng == nullptr) all generator tensors
// under the "generator." prefix, with the word table under "shared.".
GeneratorParams build_generator(ParameterStore& store, const ModelConfig& cfg, Rng* rng);

struct Prototype {
  TokenSequence ids;  // includes the terminating EOS when one was emitted
  Tensor step_probs;  // [steps, vocab] rows of output distributions; optional
};

Tensor generator_decoder_layer(const Tensor& y_repr, const Tensor& encoded_persona,
                               const Tensor& encoded_query, const DecoderLayerParams& p,
                               const AttnMask& causal, const AttnMask* persona_mask = nullptr,
                               const AttnMask* query_mask = nullptr);

// Logits for every target position in one parallel pass: decoder input is
// BOS-prefixed gold, so row count = gold length + 1 (the EOS target).
Tensor teacher_forced_logits(const TokenSequence& persona_unfolded, const TokenSequence& query,
                             const TokenSequence& gold, const GeneratorParams& p);

// Greedy argmax decoding from BOS until EOS or max_len, ties broken by the
// lowest token id; PAD is never a candidate. Deterministic.
Prototype generate_prototype(const TokenSequence& persona_unfolded, const TokenSequence& query,
                             const GeneratorParams& p, std::size_t max_len,
                             bool keep_probs = false);

// Greedy argmax over a logits row with some ids excluded.
std::size_t argmax_excluding(const Tensor& logits, std::size_t row,
                             const std::vector<int>& excluded);

}  // namespace gdr
