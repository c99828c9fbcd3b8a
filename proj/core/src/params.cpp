#include "gdr/params.hpp"

#include <stdexcept>

namespace gdr {

void ModelConfig::validate() const {
  if (hidden == 0 || heads == 0 || ffn_inner == 0) {
    throw std::invalid_argument("ModelConfig: dimensions must be positive");
  }
  if (hidden % heads != 0) {
    throw std::invalid_argument("ModelConfig: hidden " + std::to_string(hidden) +
                                " not divisible by heads " + std::to_string(heads));
  }
  if (layers_g == 0 || layers_d == 0 || layers_r == 0) {
    throw std::invalid_argument("ModelConfig: layer counts must be >= 1");
  }
  if (vocab_size <= static_cast<std::size_t>(kReservedTokens)) {
    throw std::invalid_argument("ModelConfig: vocabulary too small");
  }
  if (max_query_len > horizon || max_response_len > horizon || max_persona_len > horizon) {
    throw std::invalid_argument("ModelConfig: max lengths exceed the position horizon");
  }
}

Tensor ParamBuilder::existing(const std::string& name, const std::vector<std::size_t>& shape) {
  Tensor t = store_.get(name);
  if (t.shape != shape) {
    throw std::invalid_argument("parameter '" + name + "' has shape " + shape_string(t.shape) +
                                ", expected " + shape_string(shape));
  }
  return t;
}

Tensor ParamBuilder::weight(const std::string& name, std::size_t fan_in, std::size_t fan_out) {
  if (rng_) return store_.init_weight(name, fan_in, fan_out, *rng_);
  return existing(name, {fan_in, fan_out});
}

Tensor ParamBuilder::embedding(const std::string& name, std::size_t vocab, std::size_t hidden) {
  if (!rng_) return existing(name, {vocab, hidden});
  Tensor t({vocab, hidden}, true);
  for (double& v : *t.data) v = rng_->uniform(-1.0, 1.0);
  return store_.add(name, std::move(t));
}

Tensor ParamBuilder::zeros(const std::string& name, std::vector<std::size_t> shape) {
  if (rng_) return store_.init_zeros(name, shape);
  return existing(name, shape);
}

Tensor ParamBuilder::ones(const std::string& name, std::vector<std::size_t> shape) {
  if (rng_) return store_.init_ones(name, shape);
  return existing(name, shape);
}

LinearParams ParamBuilder::linear(const std::string& prefix, std::size_t in, std::size_t out) {
  LinearParams p;
  p.weight = weight(prefix + ".w", in, out);
  p.bias = zeros(prefix + ".b", {1, out});
  return p;
}

AttentionParams ParamBuilder::attention(const std::string& prefix, std::size_t hidden,
                                        std::size_t heads) {
  AttentionParams p;
  p.query = linear(prefix + ".q", hidden, hidden);
  p.key = linear(prefix + ".k", hidden, hidden);
  p.value = linear(prefix + ".v", hidden, hidden);
  p.output = linear(prefix + ".o", hidden, hidden);
  p.heads = heads;
  return p;
}

FfnParams ParamBuilder::ffn(const std::string& prefix, std::size_t hidden, std::size_t inner) {
  FfnParams p;
  p.inner = linear(prefix + ".inner", hidden, inner);
  p.outer = linear(prefix + ".outer", inner, hidden);
  return p;
}

LayerNormParams ParamBuilder::layer_norm(const std::string& prefix, std::size_t hidden) {
  LayerNormParams p;
  p.gain = ones(prefix + ".gain", {1, hidden});
  p.bias = zeros(prefix + ".bias", {1, hidden});
  return p;
}

EncoderParams ParamBuilder::encoder(const std::string& prefix, std::size_t layers,
                                    const ModelConfig& cfg) {
  EncoderParams enc;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string base = prefix + ".layer" + std::to_string(l);
    EncoderLayerParams layer;
    layer.self_attn = attention(base + ".self", cfg.hidden, cfg.heads);
    layer.ln_attn = layer_norm(base + ".self_ln", cfg.hidden);
    layer.ffn = ffn(base + ".ffn", cfg.hidden, cfg.ffn_inner);
    layer.ln_ffn = layer_norm(base + ".ffn_ln", cfg.hidden);
    enc.layers.push_back(layer);
  }
  return enc;
}

}  // namespace gdr
