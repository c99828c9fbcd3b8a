#include "gdr/rewriter.hpp"

#include <stdexcept>
#include <string>

namespace gdr {

RewriterParams build_rewriter(ParameterStore& store, const GeneratorParams& generator, Rng* rng) {
  const ModelConfig& cfg = generator.config;
  ParamBuilder b(store, rng);
  RewriterParams p;
  p.config = cfg;
  p.embedding = generator.embedding;
  p.encoder = generator.encoder;
  for (std::size_t l = 0; l < cfg.layers_r; ++l) {
    const std::string base = "rewriter.layer" + std::to_string(l);
    RewriterLayerParams layer;
    layer.self_attn = b.attention(base + ".self", cfg.hidden, cfg.heads);
    layer.ln_self = b.layer_norm(base + ".self_ln", cfg.hidden);
    layer.persona_attn = b.attention(base + ".persona", cfg.hidden, cfg.heads);
    layer.ln_persona = b.layer_norm(base + ".persona_ln", cfg.hidden);
    layer.prototype_attn = b.attention(base + ".prototype", cfg.hidden, cfg.heads);
    layer.ln_prototype = b.layer_norm(base + ".prototype_ln", cfg.hidden);
    layer.ffn = b.ffn(base + ".ffn", cfg.hidden, cfg.ffn_inner);
    layer.ln_ffn = b.layer_norm(base + ".ffn_ln", cfg.hidden);
    p.layers.push_back(layer);
  }
  p.out_proj = b.linear("rewriter.out", cfg.hidden, cfg.vocab_size);
  return p;
}

Tensor encode_masked_prototype(const MaskedPrototype& masked, const RewriterParams& p) {
  if (masked.ids.empty()) {
    throw std::invalid_argument("encode_masked_prototype: empty masked prototype");
  }
  if (masked.ids.size() > p.config.max_response_len + 1) {
    throw std::invalid_argument("encode_masked_prototype: length " +
                                std::to_string(masked.ids.size()) + " exceeds maximum " +
                                std::to_string(p.config.max_response_len + 1));
  }
  return encode_sequence(masked.ids, p.embedding, p.encoder, p.config.horizon);
}

Tensor rewriter_layer(const Tensor& y_repr, const Tensor& encoded_persona,
                      const Tensor& encoded_masked_prototype, const RewriterLayerParams& p,
                      const AttnMask& causal, const AttnMask* persona_mask,
                      const AttnMask* prototype_mask) {
  Tensor v = residual_layer_norm(
      y_repr, multi_head_attention(y_repr, y_repr, y_repr, p.self_attn, &causal), p.ln_self);
  Tensor s = residual_layer_norm(
      v, multi_head_attention(v, encoded_persona, encoded_persona, p.persona_attn, persona_mask),
      p.ln_persona);
  Tensor k = residual_layer_norm(
      s,
      multi_head_attention(s, encoded_masked_prototype, encoded_masked_prototype,
                           p.prototype_attn, prototype_mask),
      p.ln_prototype);
  Tensor mixed = scale(add(s, k), 0.5);
  return residual_layer_norm(mixed, feed_forward(mixed, p.ffn), p.ln_ffn);
}

namespace {

Tensor rewriter_states(const TokenSequence& decoder_input, const Tensor& encoded_persona,
                       const Tensor& encoded_masked, const RewriterParams& p,
                       const TokenSequence& persona_ids, const TokenSequence& masked_ids) {
  const AttnMask causal = AttnMask::causal(decoder_input.size());
  const AttnMask persona_mask = pad_key_mask(decoder_input.size(), persona_ids);
  const AttnMask prototype_mask = pad_key_mask(decoder_input.size(), masked_ids);
  Tensor y = embed_sequence(p.embedding, decoder_input, p.config.horizon);
  for (const RewriterLayerParams& layer : p.layers) {
    y = rewriter_layer(y, encoded_persona, encoded_masked, layer, causal, &persona_mask,
                       &prototype_mask);
  }
  return y;
}

void validate_rewriter_inputs(const MaskedPrototype& masked, const TokenSequence& persona,
                              const RewriterParams& p) {
  if (persona.empty()) throw std::invalid_argument("rewriter: empty persona sequence");
  if (persona.size() > p.config.max_persona_len) {
    throw std::invalid_argument("rewriter: persona length " + std::to_string(persona.size()) +
                                " exceeds maximum " + std::to_string(p.config.max_persona_len));
  }
  if (masked.ids.empty()) throw std::invalid_argument("rewriter: empty masked prototype");
}

}  // namespace

Tensor rewriter_teacher_forced_logits(const MaskedPrototype& masked,
                                      const TokenSequence& persona_unfolded,
                                      const TokenSequence& gold, const RewriterParams& p) {
  validate_rewriter_inputs(masked, persona_unfolded, p);
  if (gold.empty()) {
    throw std::invalid_argument("rewriter_teacher_forced_logits: empty gold response");
  }
  if (gold.size() > p.config.max_response_len) {
    throw std::invalid_argument("rewriter_teacher_forced_logits: response length " +
                                std::to_string(gold.size()) + " exceeds maximum " +
                                std::to_string(p.config.max_response_len));
  }
  Tensor enc_p = encode_sequence(persona_unfolded, p.embedding, p.encoder, p.config.horizon);
  Tensor enc_mp = encode_masked_prototype(masked, p);
  TokenSequence decoder_input;
  decoder_input.reserve(gold.size() + 1);
  decoder_input.push_back(kBosId);
  decoder_input.insert(decoder_input.end(), gold.begin(), gold.end());
  Tensor states =
      rewriter_states(decoder_input, enc_p, enc_mp, p, persona_unfolded, masked.ids);
  return linear(states, p.out_proj);
}

TokenSequence rewrite(const MaskedPrototype& masked, const TokenSequence& persona_unfolded,
                      const RewriterParams& p, std::size_t max_len) {
  validate_rewriter_inputs(masked, persona_unfolded, p);
  if (max_len == 0) throw std::invalid_argument("rewrite: max_len must be >= 1");
  NoGradGuard no_grad;
  Tensor enc_p = encode_sequence(persona_unfolded, p.embedding, p.encoder, p.config.horizon);
  Tensor enc_mp = encode_masked_prototype(masked, p);

  TokenSequence out;
  TokenSequence prefix = {kBosId};
  for (std::size_t step = 0; step < max_len; ++step) {
    Tensor states = rewriter_states(prefix, enc_p, enc_mp, p, persona_unfolded, masked.ids);
    Tensor logits = linear(states, p.out_proj);
    const int next =
        static_cast<int>(argmax_excluding(logits, logits.rows() - 1, {kPadId, kMaskId}));
    out.push_back(next);
    if (next == kEosId) break;
    prefix.push_back(next);
  }
  return out;
}

}  // namespace gdr
