#pragma once

#include <vector>

#include "gdr/nn.hpp"
#include "gdr/vocab.hpp"

namespace gdr {

struct EncoderLayerParams {
  AttentionParams self_attn;
  LayerNormParams ln_attn;
  FfnParams ffn;
  LayerNormParams ln_ffn;
};

// Self-attentive encoder: each layer is masked self-attention then a
// position-wise feed-forward, both wrapped in residual layer norm.
struct EncoderParams {
  std::vector<EncoderLayerParams> layers;
};

// Concatenates persona sentences into one sequence with an EOS separator
// appended after each sentence. Rejects empty input or overflow of max_len.
TokenSequence unfold_persona(const std::vector<TokenSequence>& personas, std::size_t max_len);

// Row t = word_embedding[id_t] + sinusoidal_position[t]. `horizon` bounds the
// position table; longer sequences are rejected.
Tensor embed_sequence(const Tensor& embedding_table, const TokenSequence& ids,
                      std::size_t horizon);

// Full encoder pass. PAD key positions are masked out of self-attention, so
// appending PAD never changes the encodings of earlier positions. An all-PAD
// input is an error.
Tensor encode_sequence(const TokenSequence& ids, const Tensor& embedding_table,
                       const EncoderParams& params, std::size_t horizon);

// Attention mask that keeps only non-PAD key columns (rows = query length).
AttnMask pad_key_mask(std::size_t query_len, const TokenSequence& key_ids);

std::size_t non_pad_length(const TokenSequence& ids);

}  // namespace gdr
