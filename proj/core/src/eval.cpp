#include "gdr/eval.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>

#include "gdr/error.hpp"

namespace gdr {

namespace {

// Reproduces the training-time conditioning for one example and returns the
// summed NLL over its gold targets plus the target count.
std::pair<double, std::size_t> example_nll(const ModelBundle& bundle,
                                           const TokenizedDialogue& ex, Variant variant,
                                           Rng& grdr_rng) {
  TokenSequence targets = ex.response;
  targets.push_back(kEosId);

  Tensor logits;
  if (variant == Variant::g) {
    logits = teacher_forced_logits(ex.persona_unfolded, ex.query, ex.response, *bundle.generator);
  } else {
    const Prototype proto = generate_prototype(ex.persona_unfolded, ex.query, *bundle.generator,
                                               bundle.decode_max_len);
    MaskedPrototype masked;
    switch (variant) {
      case Variant::gr:
        masked.ids = proto.ids;
        break;
      case Variant::grdr:
        masked = random_delete(proto, bundle.random_delete_prob, grdr_rng);
        break;
      case Variant::gdr: {
        const MatchVerdict verdict = match(ex.persona_unfolded, proto.ids, *bundle.matcher);
        masked = delete_words(proto, verdict, bundle.delete_fraction);
        break;
      }
      case Variant::g:
        break;
    }
    logits =
        rewriter_teacher_forced_logits(masked, ex.persona_unfolded, ex.response, *bundle.rewriter);
  }
  const Tensor mean_ce = cross_entropy_with_logits(logits, targets, kPadId);
  return {mean_ce.scalar() * static_cast<double>(targets.size()), targets.size()};
}

void require_stages(const ModelBundle& bundle, Variant variant) {
  if (!bundle.generator) throw std::invalid_argument("evaluate: checkpoint has no generator");
  if (variant != Variant::g && !bundle.rewriter) {
    throw std::invalid_argument("evaluate: variant " + std::string(variant_name(variant)) +
                                " needs rewriter parameters");
  }
  if (variant == Variant::gdr && !bundle.matcher) {
    throw std::invalid_argument("evaluate: variant gdr needs matcher parameters");
  }
}

}  // namespace

TokenSequence content_tokens(const TokenSequence& ids) {
  TokenSequence out;
  for (int id : ids) {
    if (id == kPadId || id == kBosId || id == kEosId) continue;
    out.push_back(id);
  }
  return out;
}

double perplexity(const ModelBundle& bundle, const std::vector<TokenizedDialogue>& dataset,
                  Variant variant) {
  if (dataset.empty()) throw std::invalid_argument("perplexity: empty dataset");
  require_stages(bundle, variant);
  NoGradGuard no_grad;
  Rng grdr_rng = Rng(bundle.seed).fork(2);
  double total_nll = 0.0;
  std::size_t total_tokens = 0;
  for (const TokenizedDialogue& ex : dataset) {
    const auto [nll, count] = example_nll(bundle, ex, variant, grdr_rng);
    total_nll += nll;
    total_tokens += count;
  }
  return std::exp(total_nll / static_cast<double>(total_tokens));
}

double distinct_n(const std::vector<TokenSequence>& responses, int n) {
  if (n != 1 && n != 2) throw std::invalid_argument("distinct_n: n must be 1 or 2");
  std::set<std::vector<int>> distinct;
  std::size_t total = 0;
  for (const TokenSequence& response : responses) {
    const TokenSequence content = content_tokens(response);
    if (content.size() < static_cast<std::size_t>(n)) continue;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= content.size(); ++i) {
      distinct.insert(
          std::vector<int>(content.begin() + static_cast<std::ptrdiff_t>(i),
                           content.begin() + static_cast<std::ptrdiff_t>(i) + n));
      ++total;
    }
  }
  if (total == 0) {
    throw std::invalid_argument("distinct_n: no response has " + std::to_string(n) + " tokens");
  }
  return static_cast<double>(distinct.size()) / static_cast<double>(total);
}

double entailment_ratio(const MatcherParams& judge,
                        const std::vector<std::pair<std::vector<TokenSequence>, TokenSequence>>&
                            persona_response_pairs) {
  if (persona_response_pairs.empty()) {
    throw std::invalid_argument("entailment_ratio: empty input");
  }
  NoGradGuard no_grad;
  std::size_t entailed = 0;
  for (const auto& [persona_sentences, response] : persona_response_pairs) {
    for (const TokenSequence& sentence : persona_sentences) {
      TokenSequence premise = sentence;
      premise.push_back(kEosId);
      const MatchVerdict verdict = match(premise, response, judge);
      if (verdict.label == NliLabel::entailment) {
        ++entailed;
        break;
      }
    }
  }
  return static_cast<double>(entailed) / static_cast<double>(persona_response_pairs.size());
}

EvalOutput evaluate(const ModelBundle& bundle, const MatcherParams& judge,
                    const std::vector<TokenizedDialogue>& dataset, Variant variant) {
  if (dataset.empty()) throw std::invalid_argument("evaluate: empty dataset");
  require_stages(bundle, variant);
  NoGradGuard no_grad;

  EvalOutput out;
  out.traces.reserve(dataset.size());
  std::vector<TokenSequence> finals;
  std::vector<std::pair<std::vector<TokenSequence>, TokenSequence>> pairs;
  for (const TokenizedDialogue& ex : dataset) {
    PipelineTrace trace = respond(ex, bundle, variant);
    finals.push_back(trace.final_ids);
    pairs.emplace_back(ex.persona_sentences, trace.final_ids);
    out.traces.push_back(std::move(trace));
  }

  out.report.ppl = perplexity(bundle, dataset, variant);
  out.report.dist1 = distinct_n(finals, 1);
  out.report.dist2 = distinct_n(finals, 2);
  out.report.entailment_ratio = entailment_ratio(judge, pairs);
  out.report.examples = dataset.size();
  std::size_t tokens = 0;
  for (const TokenizedDialogue& ex : dataset) tokens += ex.response.size() + 1;
  out.report.tokens = tokens;
  return out;
}

}  // namespace gdr
