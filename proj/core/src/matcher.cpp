#include "gdr/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gdr {

const char* nli_label_name(NliLabel label) {
  switch (label) {
    case NliLabel::entailment:
      return "entailment";
    case NliLabel::neutral:
      return "neutral";
    case NliLabel::contradiction:
      return "contradiction";
  }
  return "?";
}

std::optional<NliLabel> parse_nli_label(const std::string& name) {
  if (name == "entailment") return NliLabel::entailment;
  if (name == "neutral") return NliLabel::neutral;
  if (name == "contradiction") return NliLabel::contradiction;
  return std::nullopt;
}

MatcherParams build_matcher(ParameterStore& store, const ModelConfig& cfg, Rng* rng) {
  cfg.validate();
  ParamBuilder b(store, rng);
  MatcherParams p;
  p.config = cfg;
  p.embedding = b.embedding("matcher.embedding", cfg.vocab_size, cfg.hidden);
  p.encoder = b.encoder("matcher.encoder", cfg.layers_d, cfg);
  p.mlp_in = b.linear("matcher.mlp_in", 4 * cfg.hidden, cfg.hidden);
  p.mlp_mid = b.linear("matcher.mlp_mid", cfg.hidden, cfg.hidden);
  p.mlp_out = b.linear("matcher.mlp_out", cfg.hidden, 3);
  return p;
}

std::pair<Tensor, Tensor> encode_pair(const TokenSequence& premise,
                                      const TokenSequence& hypothesis, const MatcherParams& p) {
  if (premise.empty() || hypothesis.empty()) {
    throw std::invalid_argument("encode_pair: empty premise or hypothesis");
  }
  if (premise.size() > p.config.max_persona_len) {
    throw std::invalid_argument("encode_pair: premise length " + std::to_string(premise.size()) +
                                " exceeds maximum " + std::to_string(p.config.max_persona_len));
  }
  if (hypothesis.size() > p.config.max_persona_len) {
    throw std::invalid_argument("encode_pair: hypothesis length " +
                                std::to_string(hypothesis.size()) + " exceeds maximum " +
                                std::to_string(p.config.max_persona_len));
  }
  Tensor a = encode_sequence(premise, p.embedding, p.encoder, p.config.horizon);
  Tensor b = encode_sequence(hypothesis, p.embedding, p.encoder, p.config.horizon);
  return {a, b};
}

AttentivePooling attentive_pool(const Tensor& premise_enc, const Tensor& hypothesis_enc,
                                std::size_t valid_premise, std::size_t valid_hypothesis) {
  const std::size_t n = valid_premise == 0 ? premise_enc.rows() : valid_premise;
  const std::size_t m = valid_hypothesis == 0 ? hypothesis_enc.rows() : valid_hypothesis;
  AttentivePooling pool;
  pool.premise_summary = mean_rows(premise_enc, n);
  pool.hypothesis_summary = mean_rows(hypothesis_enc, m);

  AttnMask premise_keep(1, premise_enc.rows(), false);
  for (std::size_t j = 0; j < n; ++j) premise_keep.set(0, j, true);
  AttnMask hypothesis_keep(1, hypothesis_enc.rows(), false);
  for (std::size_t j = 0; j < m; ++j) hypothesis_keep.set(0, j, true);

  Tensor premise_scores = matmul(pool.hypothesis_summary, transpose(premise_enc));
  pool.premise_weights = row_softmax(premise_scores, &premise_keep);
  pool.premise_attentive = matmul(pool.premise_weights, premise_enc);

  Tensor hypothesis_scores = matmul(pool.premise_summary, transpose(hypothesis_enc));
  pool.hypothesis_weights = row_softmax(hypothesis_scores, &hypothesis_keep);
  pool.hypothesis_attentive = matmul(pool.hypothesis_weights, hypothesis_enc);
  return pool;
}

Tensor match_features(const Tensor& premise_attentive, const Tensor& hypothesis_attentive) {
  if (premise_attentive.shape != hypothesis_attentive.shape) {
    throw std::invalid_argument("match_features: dimension mismatch " +
                                shape_string(premise_attentive.shape) + " vs " +
                                shape_string(hypothesis_attentive.shape));
  }
  return concat_cols({premise_attentive, hypothesis_attentive,
                      mul(premise_attentive, hypothesis_attentive),
                      sub(premise_attentive, hypothesis_attentive)});
}

Tensor classifier_logits(const Tensor& features, const MatcherParams& p) {
  Tensor h1 = tanh_activation(linear(features, p.mlp_in));
  Tensor h2 = tanh_activation(linear(h1, p.mlp_mid));
  return linear(h2, p.mlp_out);
}

Tensor classify(const Tensor& features, const MatcherParams& p) {
  return row_softmax(classifier_logits(features, p));
}

Tensor nli_logits(const TokenSequence& premise, const TokenSequence& hypothesis,
                  const MatcherParams& p) {
  auto [a, b] = encode_pair(premise, hypothesis, p);
  AttentivePooling pool = attentive_pool(a, b, non_pad_length(premise), non_pad_length(hypothesis));
  return classifier_logits(match_features(pool.premise_attentive, pool.hypothesis_attentive), p);
}

MatchVerdict match(const TokenSequence& premise, const TokenSequence& hypothesis,
                   const MatcherParams& p) {
  NoGradGuard no_grad;
  auto [a, b] = encode_pair(premise, hypothesis, p);
  AttentivePooling pool = attentive_pool(a, b, non_pad_length(premise), non_pad_length(hypothesis));
  Tensor probs = classify(match_features(pool.premise_attentive, pool.hypothesis_attentive), p);

  MatchVerdict verdict;
  for (std::size_t i = 0; i < 3; ++i) verdict.probs[i] = probs.at(0, i);
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (verdict.probs[i] > verdict.probs[best]) best = i;
  }
  verdict.label = static_cast<NliLabel>(static_cast<int>(best));
  verdict.persona_weights.resize(premise.size());
  for (std::size_t j = 0; j < premise.size(); ++j) {
    verdict.persona_weights[j] = pool.premise_weights.at(0, j);
  }
  verdict.response_weights.resize(hypothesis.size());
  for (std::size_t j = 0; j < hypothesis.size(); ++j) {
    verdict.response_weights[j] = pool.hypothesis_weights.at(0, j);
  }
  return verdict;
}

MaskedPrototype delete_words(const Prototype& prototype, const MatchVerdict& verdict,
                             double fraction) {
  const std::size_t m = prototype.ids.size();
  if (m == 0) throw std::invalid_argument("delete_words: empty prototype");
  if (verdict.response_weights.size() != m) {
    throw std::invalid_argument("delete_words: weight count " +
                                std::to_string(verdict.response_weights.size()) +
                                " does not match prototype length " + std::to_string(m));
  }
  MaskedPrototype masked;
  masked.ids = prototype.ids;
  if (verdict.label == NliLabel::entailment) return masked;

  const std::size_t d =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m))));
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return verdict.response_weights[a] > verdict.response_weights[b];
  });
  masked.masked_positions.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(d));
  std::sort(masked.masked_positions.begin(), masked.masked_positions.end());
  for (std::size_t pos : masked.masked_positions) masked.ids[pos] = kMaskId;
  return masked;
}

}  // namespace gdr
