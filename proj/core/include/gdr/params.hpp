#pragma once

#include <string>

#include "gdr/encoder.hpp"
#include "gdr/nn.hpp"
#include "gdr/rng.hpp"
#include "gdr/store.hpp"

namespace gdr {

// Desk-scale defaults: a single decoder layer over hidden 12 keeps the
// one-stage generator honestly imperfect on the synthetic corpus, while two
// rewriter layers leave the edit stage strong.
struct ModelConfig {
  std::size_t hidden = 12;
  std::size_t heads = 2;
  std::size_t ffn_inner = 24;
  std::size_t layers_g = 1;
  std::size_t layers_d = 1;
  std::size_t layers_r = 2;
  std::size_t vocab_size = 0;
  std::size_t horizon = 512;
  std::size_t max_query_len = 64;
  std::size_t max_response_len = 64;
  std::size_t max_persona_len = 128;

  void validate() const;
};

// Builds named parameter groups either by initializing fresh tensors into the
// store (rng != nullptr: Glorot-uniform weights, zero biases, unit gains,
// requires_grad on) or by binding existing entries, e.g. after a checkpoint
// load (rng == nullptr: shapes validated, grad flags left untouched).
class ParamBuilder {
 public:
  ParamBuilder(ParameterStore& store, Rng* rng) : store_(store), rng_(rng) {}

  Tensor weight(const std::string& name, std::size_t fan_in, std::size_t fan_out);
  // Lookup tables are not matmul weights: their rows must stay comparable in
  // magnitude to the O(1) sinusoidal position signal, so they initialize at
  // unit scale rather than Glorot.
  Tensor embedding(const std::string& name, std::size_t vocab, std::size_t hidden);
  Tensor zeros(const std::string& name, std::vector<std::size_t> shape);
  Tensor ones(const std::string& name, std::vector<std::size_t> shape);

  LinearParams linear(const std::string& prefix, std::size_t in, std::size_t out);
  AttentionParams attention(const std::string& prefix, std::size_t hidden, std::size_t heads);
  FfnParams ffn(const std::string& prefix, std::size_t hidden, std::size_t inner);
  LayerNormParams layer_norm(const std::string& prefix, std::size_t hidden);
  EncoderParams encoder(const std::string& prefix, std::size_t layers, const ModelConfig& cfg);

  bool initializing() const { return rng_ != nullptr; }

 private:
  Tensor existing(const std::string& name, const std::vector<std::size_t>& shape);

  ParameterStore& store_;
  Rng* rng_;
};

}  // namespace gdr
