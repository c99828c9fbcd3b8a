#include "gdr/encoder.hpp"

#include <stdexcept>
#include <string>

namespace gdr {

TokenSequence unfold_persona(const std::vector<TokenSequence>& personas, std::size_t max_len) {
  if (personas.empty()) throw std::invalid_argument("unfold_persona: no persona sentences");
  TokenSequence out;
  for (std::size_t i = 0; i < personas.size(); ++i) {
    if (personas[i].empty()) {
      throw std::invalid_argument("unfold_persona: persona sentence " + std::to_string(i) +
                                  " is empty");
    }
    out.insert(out.end(), personas[i].begin(), personas[i].end());
    out.push_back(kEosId);
  }
  if (out.size() > max_len) {
    throw std::invalid_argument("unfold_persona: unfolded length " + std::to_string(out.size()) +
                                " exceeds maximum " + std::to_string(max_len));
  }
  return out;
}

Tensor embed_sequence(const Tensor& embedding_table, const TokenSequence& ids,
                      std::size_t horizon) {
  if (ids.empty()) throw std::invalid_argument("embed_sequence: empty sequence");
  if (ids.size() > horizon) {
    throw std::invalid_argument("embed_sequence: length " + std::to_string(ids.size()) +
                                " exceeds position horizon " + std::to_string(horizon));
  }
  Tensor words = embedding_rows(embedding_table, ids);
  Tensor positions = sinusoidal_positions(ids.size(), embedding_table.cols());
  return add(words, positions);
}

std::size_t non_pad_length(const TokenSequence& ids) {
  std::size_t n = 0;
  for (int id : ids)
    if (id != kPadId) ++n;
  return n;
}

AttnMask pad_key_mask(std::size_t query_len, const TokenSequence& key_ids) {
  AttnMask m(query_len, key_ids.size(), false);
  for (std::size_t i = 0; i < query_len; ++i)
    for (std::size_t j = 0; j < key_ids.size(); ++j)
      if (key_ids[j] != kPadId) m.set(i, j, true);
  return m;
}

Tensor encode_sequence(const TokenSequence& ids, const Tensor& embedding_table,
                       const EncoderParams& params, std::size_t horizon) {
  if (params.layers.empty()) throw std::invalid_argument("encode_sequence: no encoder layers");
  if (non_pad_length(ids) == 0) throw std::invalid_argument("encode_sequence: all-PAD input");
  const AttnMask mask = pad_key_mask(ids.size(), ids);
  Tensor state = embed_sequence(embedding_table, ids, horizon);
  for (const EncoderLayerParams& layer : params.layers) {
    Tensor attended = multi_head_attention(state, state, state, layer.self_attn, &mask);
    Tensor v = residual_layer_norm(state, attended, layer.ln_attn);
    Tensor ff = feed_forward(v, layer.ffn);
    state = residual_layer_norm(v, ff, layer.ln_ffn);
  }
  return state;
}

}  // namespace gdr
