#include "gdr/generator.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace gdr {

GeneratorParams build_generator(ParameterStore& store, const ModelConfig& cfg, Rng* rng) {
  cfg.validate();
  ParamBuilder b(store, rng);
  GeneratorParams p;
  p.config = cfg;
  p.embedding = b.embedding("shared.embedding", cfg.vocab_size, cfg.hidden);
  p.encoder = b.encoder("generator.encoder", cfg.layers_g, cfg);
  for (std::size_t l = 0; l < cfg.layers_g; ++l) {
    const std::string base = "generator.decoder.layer" + std::to_string(l);
    DecoderLayerParams layer;
    layer.self_attn = b.attention(base + ".self", cfg.hidden, cfg.heads);
    layer.ln_self = b.layer_norm(base + ".self_ln", cfg.hidden);
    layer.persona_attn = b.attention(base + ".persona", cfg.hidden, cfg.heads);
    layer.ln_persona = b.layer_norm(base + ".persona_ln", cfg.hidden);
    layer.query_attn = b.attention(base + ".query", cfg.hidden, cfg.heads);
    layer.ln_query = b.layer_norm(base + ".query_ln", cfg.hidden);
    layer.persona_query_attn = b.attention(base + ".persona_query", cfg.hidden, cfg.heads);
    layer.ln_persona_query = b.layer_norm(base + ".persona_query_ln", cfg.hidden);
    layer.ffn = b.ffn(base + ".ffn", cfg.hidden, cfg.ffn_inner);
    layer.ln_ffn = b.layer_norm(base + ".ffn_ln", cfg.hidden);
    p.decoder.push_back(layer);
  }
  p.out_proj = b.linear("generator.out", cfg.hidden, cfg.vocab_size);
  return p;
}

Tensor generator_decoder_layer(const Tensor& y_repr, const Tensor& encoded_persona,
                               const Tensor& encoded_query, const DecoderLayerParams& p,
                               const AttnMask& causal, const AttnMask* persona_mask,
                               const AttnMask* query_mask) {
  if (encoded_persona.size() == 0 || encoded_query.size() == 0) {
    throw std::invalid_argument("generator_decoder_layer: empty encoded inputs");
  }
  Tensor v = residual_layer_norm(
      y_repr, multi_head_attention(y_repr, y_repr, y_repr, p.self_attn, &causal), p.ln_self);
  Tensor e = residual_layer_norm(
      v, multi_head_attention(v, encoded_persona, encoded_persona, p.persona_attn, persona_mask),
      p.ln_persona);
  Tensor f = residual_layer_norm(
      v, multi_head_attention(v, encoded_query, encoded_query, p.query_attn, query_mask),
      p.ln_query);
  // The chained attention reads query rows from e over key/value rows from f;
  // both are indexed by target position, so the causal mask applies here too.
  Tensor t = residual_layer_norm(e, multi_head_attention(e, f, f, p.persona_query_attn, &causal),
                                 p.ln_persona_query);
  Tensor mixed = scale(add(add(e, f), t), 1.0 / 3.0);
  return residual_layer_norm(mixed, feed_forward(mixed, p.ffn), p.ln_ffn);
}

namespace {

Tensor decoder_states(const TokenSequence& decoder_input, const Tensor& encoded_persona,
                      const Tensor& encoded_query, const GeneratorParams& p,
                      const TokenSequence& persona_ids, const TokenSequence& query_ids) {
  const AttnMask causal = AttnMask::causal(decoder_input.size());
  const AttnMask persona_mask = pad_key_mask(decoder_input.size(), persona_ids);
  const AttnMask query_mask = pad_key_mask(decoder_input.size(), query_ids);
  Tensor y = embed_sequence(p.embedding, decoder_input, p.config.horizon);
  for (const DecoderLayerParams& layer : p.decoder) {
    y = generator_decoder_layer(y, encoded_persona, encoded_query, layer, causal, &persona_mask,
                                &query_mask);
  }
  return y;
}

void validate_generator_inputs(const TokenSequence& persona, const TokenSequence& query,
                               const GeneratorParams& p) {
  if (persona.empty()) throw std::invalid_argument("generator: empty persona sequence");
  if (query.empty()) throw std::invalid_argument("generator: empty query");
  if (persona.size() > p.config.max_persona_len) {
    throw std::invalid_argument("generator: persona length " + std::to_string(persona.size()) +
                                " exceeds maximum " + std::to_string(p.config.max_persona_len));
  }
  if (query.size() > p.config.max_query_len) {
    throw std::invalid_argument("generator: query length " + std::to_string(query.size()) +
                                " exceeds maximum " + std::to_string(p.config.max_query_len));
  }
}

}  // namespace

Tensor teacher_forced_logits(const TokenSequence& persona_unfolded, const TokenSequence& query,
                             const TokenSequence& gold, const GeneratorParams& p) {
  validate_generator_inputs(persona_unfolded, query, p);
  if (gold.empty()) throw std::invalid_argument("teacher_forced_logits: empty gold response");
  if (gold.size() > p.config.max_response_len) {
    throw std::invalid_argument("teacher_forced_logits: response length " +
                                std::to_string(gold.size()) + " exceeds maximum " +
                                std::to_string(p.config.max_response_len));
  }
  Tensor enc_p = encode_sequence(persona_unfolded, p.embedding, p.encoder, p.config.horizon);
  Tensor enc_q = encode_sequence(query, p.embedding, p.encoder, p.config.horizon);
  TokenSequence decoder_input;
  decoder_input.reserve(gold.size() + 1);
  decoder_input.push_back(kBosId);
  decoder_input.insert(decoder_input.end(), gold.begin(), gold.end());
  Tensor states = decoder_states(decoder_input, enc_p, enc_q, p, persona_unfolded, query);
  return linear(states, p.out_proj);
}

std::size_t argmax_excluding(const Tensor& logits, std::size_t row,
                             const std::vector<int>& excluded) {
  const std::size_t v = logits.cols();
  std::size_t best = v;
  double best_value = 0.0;
  for (std::size_t j = 0; j < v; ++j) {
    if (std::find(excluded.begin(), excluded.end(), static_cast<int>(j)) != excluded.end()) {
      continue;
    }
    const double value = logits.at(row, j);
    if (best == v || value > best_value) {
      best = j;
      best_value = value;
    }
  }
  if (best == v) throw std::invalid_argument("argmax_excluding: every id excluded");
  return best;
}

Prototype generate_prototype(const TokenSequence& persona_unfolded, const TokenSequence& query,
                             const GeneratorParams& p, std::size_t max_len, bool keep_probs) {
  validate_generator_inputs(persona_unfolded, query, p);
  if (max_len == 0) throw std::invalid_argument("generate_prototype: max_len must be >= 1");
  NoGradGuard no_grad;
  Tensor enc_p = encode_sequence(persona_unfolded, p.embedding, p.encoder, p.config.horizon);
  Tensor enc_q = encode_sequence(query, p.embedding, p.encoder, p.config.horizon);

  Prototype proto;
  std::vector<double> probs_flat;
  TokenSequence prefix = {kBosId};
  for (std::size_t step = 0; step < max_len; ++step) {
    Tensor states = decoder_states(prefix, enc_p, enc_q, p, persona_unfolded, query);
    Tensor logits = linear(states, p.out_proj);
    const std::size_t last = logits.rows() - 1;
    if (keep_probs) {
      std::vector<double> row(logits.cols());
      for (std::size_t j = 0; j < logits.cols(); ++j) row[j] = logits.at(last, j);
      const std::vector<double> soft = softmax_values(row);
      probs_flat.insert(probs_flat.end(), soft.begin(), soft.end());
    }
    const int next = static_cast<int>(argmax_excluding(logits, last, {kPadId}));
    proto.ids.push_back(next);
    if (next == kEosId) break;
    prefix.push_back(next);
  }
  if (keep_probs) {
    proto.step_probs =
        Tensor::from_values({proto.ids.size(), p.config.vocab_size}, std::move(probs_flat));
  }
  return proto;
}

}  // namespace gdr
