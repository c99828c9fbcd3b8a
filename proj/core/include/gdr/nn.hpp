#pragma once

#include "gdr/ops.hpp"
#include "gdr/tensor.hpp"

namespace gdr {

struct LinearParams {
  Tensor weight;  // [in, out]
  Tensor bias;    // [1, out]
};

struct AttentionParams {
  LinearParams query;
  LinearParams key;
  LinearParams value;
  LinearParams output;
  std::size_t heads = 1;
};

struct FfnParams {
  LinearParams inner;  // expands to the inner size, relu after
  LinearParams outer;  // projects back to hidden
};

struct LayerNormParams {
  Tensor gain;  // [1, hidden]
  Tensor bias;  // [1, hidden]
};

Tensor linear(const Tensor& x, const LinearParams& p);

// Scaled dot-product attention with learned per-head projections and an
// output projection. Masked key positions get exactly zero weight and are
// never read. q_seq/k_seq/v_seq are [len, hidden]; k and v must have equal
// row counts; hidden must divide evenly by the head count.
Tensor multi_head_attention(const Tensor& q_seq, const Tensor& k_seq, const Tensor& v_seq,
                            const AttentionParams& p, const AttnMask* mask = nullptr);

// Position-wise relu(x W1 + b1) W2 + b2.
Tensor feed_forward(const Tensor& x, const FfnParams& p);
Tensor feed_forward(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                    const Tensor& b2);

// LayerNorm(x + sublayer_out) with per-row normalization (eps = 1e-6) and an
// affine gain/bias.
Tensor residual_layer_norm(const Tensor& x, const Tensor& sublayer_out, const LayerNormParams& p);

// Parameter-free sinusoidal position table [len, hidden]: even columns sine,
// odd columns cosine, geometric wavelengths.
Tensor sinusoidal_positions(std::size_t len, std::size_t hidden);

constexpr double kLayerNormEps = 1e-6;

}  // namespace gdr
