#pragma once

#include <array>
#include <optional>
#include <string>

#include "gdr/generator.hpp"

namespace gdr {

enum class NliLabel : int { entailment = 0, neutral = 1, contradiction = 2 };

const char* nli_label_name(NliLabel label);
std::optional<NliLabel> parse_nli_label(const std::string& name);

// Consistency matching model: a self-attentive encoder of its own (never
// shared with the generator), attentive pooling on both sides, and a
// three-layer tanh MLP over [A; B; A*B; A-B] features.
struct MatcherParams {
  Tensor embedding;  // independent word table ("matcher.embedding")
  EncoderParams encoder;
  LinearParams mlp_in;
  LinearParams mlp_mid;
  LinearParams mlp_out;  // -> 3 label logits
  ModelConfig config;
};

MatcherParams build_matcher(ParameterStore& store, const ModelConfig& cfg, Rng* rng);

struct MatchVerdict {
  std::array<double, 3> probs{};
  NliLabel label = NliLabel::entailment;
  std::vector<double> response_weights;  // per hypothesis token, sums to 1
  std::vector<double> persona_weights;   // per premise token, sums to 1
};

struct MaskedPrototype {
  TokenSequence ids;
  std::vector<std::size_t> masked_positions;  // ascending
};

// Encodes premise and hypothesis with the same matcher encoder.
std::pair<Tensor, Tensor> encode_pair(const TokenSequence& premise,
                                      const TokenSequence& hypothesis, const MatcherParams& p);

struct AttentivePooling {
  Tensor premise_summary;      // mean of premise rows, [1, h]
  Tensor hypothesis_summary;   // mean of hypothesis rows, [1, h]
  Tensor premise_weights;      // [1, n], softmax of hypothesis_summary . premise rows
  Tensor hypothesis_weights;   // [1, m], softmax of premise_summary . hypothesis rows
  Tensor premise_attentive;    // [1, h]
  Tensor hypothesis_attentive;  // [1, h]
};

// Mean summaries, cross dot-product scores softmax-normalized into weights,
// and the weighted sums. valid_* == 0 means all rows are valid; PAD rows
// appended at the end are excluded via the valid counts.
AttentivePooling attentive_pool(const Tensor& premise_enc, const Tensor& hypothesis_enc,
                                std::size_t valid_premise = 0, std::size_t valid_hypothesis = 0);

// [A; B; A*B; A-B] -> [1, 4h].
Tensor match_features(const Tensor& premise_attentive, const Tensor& hypothesis_attentive);

Tensor classifier_logits(const Tensor& features, const MatcherParams& p);
// linear -> tanh -> linear -> tanh -> linear -> softmax over the 3 labels.
Tensor classify(const Tensor& features, const MatcherParams& p);

// Full matching pass for training: label logits with gradient recording.
Tensor nli_logits(const TokenSequence& premise, const TokenSequence& hypothesis,
                  const MatcherParams& p);

// Full matching pass for inference: probabilities, predicted label (argmax,
// ties resolved in label order) and both attention weight vectors.
MatchVerdict match(const TokenSequence& premise, const TokenSequence& hypothesis,
                   const MatcherParams& p);

// Masks the top-scoring words of a non-entailed prototype: d = max(1,
// floor(fraction * m)) positions with the highest response weights, earliest
// position first on ties. Entailment deletes nothing.
MaskedPrototype delete_words(const Prototype& prototype, const MatchVerdict& verdict,
                             double fraction = 0.10);

}  // namespace gdr
