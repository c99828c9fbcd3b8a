#pragma once

#include "gdr/pipeline.hpp"

namespace gdr {

struct EvalReport {
  double ppl = 0.0;
  double dist1 = 0.0;
  double dist2 = 0.0;
  double entailment_ratio = 0.0;
  std::size_t examples = 0;
  std::size_t tokens = 0;
};

// exp(total teacher-forced NLL of gold responses / total target tokens),
// scored on the final-stage decoder with the training-time conditioning:
// variant g scores the generator directly; gr/grdr/gdr decode a prototype,
// apply their masking rule and score the rewriter.
double perplexity(const ModelBundle& bundle, const std::vector<TokenizedDialogue>& dataset,
                  Variant variant);

// Corpus-level distinct n-gram ratio over response content tokens (EOS and
// other reserved ids are not content). n is 1 or 2. At least one response
// must have n tokens.
double distinct_n(const std::vector<TokenSequence>& responses, int n);

// A response counts as entailed when at least one persona sentence, paired
// with it, is classified entailment.
double entailment_ratio(const MatcherParams& judge,
                        const std::vector<std::pair<std::vector<TokenSequence>, TokenSequence>>&
                            persona_response_pairs);

struct EvalOutput {
  EvalReport report;
  std::vector<PipelineTrace> traces;  // one per dataset example, in order
};

// Runs the full pipeline over the dataset, then the three metrics. The judge
// matcher is used for the entailment ratio regardless of variant.
EvalOutput evaluate(const ModelBundle& bundle, const MatcherParams& judge,
                    const std::vector<TokenizedDialogue>& dataset, Variant variant);

// Content tokens of a generated sequence: reserved ids stripped, MASK kept.
TokenSequence content_tokens(const TokenSequence& ids);

}  // namespace gdr
