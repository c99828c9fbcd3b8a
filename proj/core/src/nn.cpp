#include "gdr/nn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gdr {

Tensor linear(const Tensor& x, const LinearParams& p) {
  return add_row_broadcast(matmul(x, p.weight), p.bias);
}

Tensor multi_head_attention(const Tensor& q_seq, const Tensor& k_seq, const Tensor& v_seq,
                            const AttentionParams& p, const AttnMask* mask) {
  const std::size_t hidden = q_seq.cols();
  if (k_seq.rows() != v_seq.rows()) {
    throw std::invalid_argument("multi_head_attention: key rows " + std::to_string(k_seq.rows()) +
                                " != value rows " + std::to_string(v_seq.rows()));
  }
  if (p.heads == 0 || hidden % p.heads != 0) {
    throw std::invalid_argument("multi_head_attention: hidden " + std::to_string(hidden) +
                                " not divisible by " + std::to_string(p.heads) + " heads");
  }
  if (mask && mask->defined() &&
      (mask->rows() != q_seq.rows() || mask->cols() != k_seq.rows())) {
    throw std::invalid_argument("multi_head_attention: mask shape does not match query x key");
  }
  const std::size_t head_dim = hidden / p.heads;
  const double inv_sqrt_dim = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Tensor q = linear(q_seq, p.query);
  Tensor k = linear(k_seq, p.key);
  Tensor v = linear(v_seq, p.value);

  std::vector<Tensor> head_outputs;
  head_outputs.reserve(p.heads);
  for (std::size_t h = 0; h < p.heads; ++h) {
    Tensor qh = slice_cols(q, h * head_dim, head_dim);
    Tensor kh = slice_cols(k, h * head_dim, head_dim);
    Tensor vh = slice_cols(v, h * head_dim, head_dim);
    Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt_dim);
    Tensor weights = row_softmax(scores, mask);
    head_outputs.push_back(matmul(weights, vh));
  }
  Tensor merged = p.heads == 1 ? head_outputs[0] : concat_cols(head_outputs);
  return linear(merged, p.output);
}

Tensor feed_forward(const Tensor& x, const FfnParams& p) {
  return linear(relu(linear(x, p.inner)), p.outer);
}

Tensor feed_forward(const Tensor& x, const Tensor& w1, const Tensor& b1, const Tensor& w2,
                    const Tensor& b2) {
  return feed_forward(x, FfnParams{{w1, b1}, {w2, b2}});
}

Tensor residual_layer_norm(const Tensor& x, const Tensor& sublayer_out, const LayerNormParams& p) {
  return layer_norm_rows(add(x, sublayer_out), p.gain, p.bias, kLayerNormEps);
}

Tensor sinusoidal_positions(std::size_t len, std::size_t hidden) {
  Tensor t({len, hidden});
  for (std::size_t pos = 0; pos < len; ++pos) {
    for (std::size_t i = 0; i < hidden; ++i) {
      const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(hidden);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      t.at(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return t;
}

}  // namespace gdr
