#include <benchmark/benchmark.h>

#include "gdr/eval.hpp"
#include "gdr/pipeline.hpp"

using namespace gdr;

namespace {

struct BenchSetup {
  SyntheticCorpus corpus;
  Vocab vocab;
  TrainingConfig cfg;
  ParameterStore store;
  GeneratorParams generator;
  RewriterParams rewriter;
  MatcherParams matcher;
  TokenizedDialogue example;

  BenchSetup() {
    SyntheticSpec spec;
    spec.train_dialogues = 64;
    spec.valid_dialogues = spec.test_dialogues = 8;
    spec.train_nli = 32;
    spec.valid_nli = spec.test_nli = 6;
    corpus = make_synthetic(spec);
    vocab = build_vocab(corpus_texts(corpus));
    cfg.model.vocab_size = vocab.size();
    Rng rng(6);
    generator = build_generator(store, cfg.model, &rng);
    rewriter = build_rewriter(store, generator, &rng);
    matcher = build_matcher(store, cfg.model, &rng);
    example = tokenize_dialogue(corpus.train[0], vocab, cfg.model);
  }
};

BenchSetup& setup() {
  static BenchSetup s;
  return s;
}

void BM_teacher_forced_step(benchmark::State& state) {
  BenchSetup& s = setup();
  TokenSequence targets = s.example.response;
  targets.push_back(kEosId);
  for (auto _ : state) {
    Tensor loss = cross_entropy_with_logits(
        teacher_forced_logits(s.example.persona_unfolded, s.example.query, s.example.response,
                              s.generator),
        targets, kPadId);
    loss.backward();
    for (const auto& [name, param] : s.store.entries()) {
      if (param.grad) param.grad->assign(param.grad->size(), 0.0);
    }
    benchmark::DoNotOptimize(loss.data->data());
  }
}
BENCHMARK(BM_teacher_forced_step);

void BM_greedy_decode(benchmark::State& state) {
  BenchSetup& s = setup();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        generate_prototype(s.example.persona_unfolded, s.example.query, s.generator, 16).ids);
  }
}
BENCHMARK(BM_greedy_decode);

void BM_match_verdict(benchmark::State& state) {
  BenchSetup& s = setup();
  TokenSequence hypothesis = s.example.response;
  hypothesis.push_back(kEosId);
  for (auto _ : state) {
    benchmark::DoNotOptimize(match(s.example.persona_unfolded, hypothesis, s.matcher).probs);
  }
}
BENCHMARK(BM_match_verdict);

void BM_rewrite(benchmark::State& state) {
  BenchSetup& s = setup();
  MaskedPrototype masked;
  masked.ids = s.example.response;
  masked.ids.push_back(kEosId);
  masked.ids[0] = kMaskId;
  masked.masked_positions = {0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(rewrite(masked, s.example.persona_unfolded, s.rewriter, 16));
  }
}
BENCHMARK(BM_rewrite);

}  // namespace
