#pragma once

#include "gdr/matcher.hpp"

namespace gdr {

// One rewriter decoder layer: causal self-attention, persona attention, then
// prototype attention chained from the persona result, then a feed-forward
// over the elementwise mean of the two attention outputs. The rewriter never
// sees the query.
struct RewriterLayerParams {
  AttentionParams self_attn;
  LayerNormParams ln_self;
  AttentionParams persona_attn;
  LayerNormParams ln_persona;
  AttentionParams prototype_attn;
  LayerNormParams ln_prototype;
  FfnParams ffn;
  LayerNormParams ln_ffn;
};

struct RewriterParams {
  Tensor embedding;       // aliases the generator's word table (one storage)
  EncoderParams encoder;  // aliases the generator's encoder
  std::vector<RewriterLayerParams> layers;
  LinearParams out_proj;  // the rewriter's own output projection
  ModelConfig config;
};

// Registers (rng != nullptr) or binds all rewriter-owned tensors under the
// "rewriter." prefix; the embedding table and encoder are shared with (and
// aliased from) the given generator parameters.
RewriterParams build_rewriter(ParameterStore& store, const GeneratorParams& generator, Rng* rng);

// Encodes the masked prototype with the generator's own encoder.
Tensor encode_masked_prototype(const MaskedPrototype& masked, const RewriterParams& p);

Tensor rewriter_layer(const Tensor& y_repr, const Tensor& encoded_persona,
                      const Tensor& encoded_masked_prototype, const RewriterLayerParams& p,
                      const AttnMask& causal, const AttnMask* persona_mask = nullptr,
                      const AttnMask* prototype_mask = nullptr);

Tensor rewriter_teacher_forced_logits(const MaskedPrototype& masked,
                                      const TokenSequence& persona_unfolded,
                                      const TokenSequence& gold, const RewriterParams& p);

// Greedy decoding as in the generator; PAD and MASK are never candidates, so
// the final response is always fully lexicalized.
TokenSequence rewrite(const MaskedPrototype& masked, const TokenSequence& persona_unfolded,
                      const RewriterParams& p, std::size_t max_len);

}  // namespace gdr
