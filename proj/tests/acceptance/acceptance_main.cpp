// Acceptance suite: runs every acceptance criterion end to end and prints one
// pass/fail line per criterion. Exits nonzero if any criterion fails.
//
// The desk-scale training criteria pin the shipped defaults: corpus seed 7,
// training seed 21, matcher at hidden 48 with one encoder layer, pipeline
// models at hidden 12 with one generator layer and two rewriter layers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "gdr/error.hpp"
#include "gdr/eval.hpp"
#include "gdr/pipeline.hpp"

using namespace gdr;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

class Criterion {
 public:
  Criterion(int number, std::string title) : number_(number), title_(std::move(title)) {
    start_ = std::chrono::steady_clock::now();
  }

  void expect(bool ok, const std::string& detail) {
    if (!ok) {
      ok_ = false;
      details_.push_back(detail);
    }
  }

  void note(const std::string& text) { notes_.push_back(text); }

  ~Criterion() {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ostringstream line;
    line << (ok_ ? "[PASS]" : "[FAIL]") << " criterion " << number_ << ": " << title_;
    for (const std::string& n : notes_) line << " | " << n;
    char buf[32];
    std::snprintf(buf, sizeof(buf), " (%.1fs)", seconds);
    line << buf;
    std::cout << line.str() << "\n";
    for (const std::string& d : details_) std::cout << "       " << d << "\n";
    std::cout.flush();
    if (!ok_) ++g_failures;
  }

 private:
  int number_;
  std::string title_;
  bool ok_ = true;
  std::vector<std::string> details_;
  std::vector<std::string> notes_;
  std::chrono::steady_clock::time_point start_;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

ModelConfig grad_config(std::size_t vocab) {
  ModelConfig cfg;
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.ffn_inner = 16;
  cfg.layers_g = 2;
  cfg.layers_d = 1;
  cfg.layers_r = 1;
  cfg.vocab_size = vocab;
  cfg.horizon = 64;
  cfg.max_query_len = 16;
  cfg.max_response_len = 16;
  cfg.max_persona_len = 32;
  return cfg;
}

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : *t.data) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Central-difference check of `loss` against the recorded gradient of every
// tensor in `params`, sampling a few entries per tensor.
struct GradOutcome {
  bool ok = true;
  double worst = 0.0;
  std::size_t checked = 0;
};

GradOutcome check_gradients(const std::vector<std::pair<std::string, Tensor>>& params,
                            const std::function<Tensor()>& loss_fn) {
  GradOutcome outcome;
  for (const auto& [name, p] : params) {
    if (p.grad) p.grad->assign(p.grad->size(), 0.0);
  }
  Tensor loss = loss_fn();
  loss.backward();
  for (const auto& [name, p] : params) {
    const std::size_t samples = std::min<std::size_t>(4, p.size());
    for (std::size_t s = 0; s < samples; ++s) {
      const std::size_t idx = s * p.size() / samples;
      const double analytic = (*p.grad)[idx];
      const double x0 = (*p.data)[idx];
      const double h = 1e-5;
      (*p.data)[idx] = x0 + h;
      const double up = loss_fn().scalar();
      (*p.data)[idx] = x0 - h;
      const double down = loss_fn().scalar();
      (*p.data)[idx] = x0;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      const double rel = std::abs(analytic - numeric) / denom;
      outcome.worst = std::max(outcome.worst, rel);
      ++outcome.checked;
      if (rel >= 1e-4 && (std::abs(analytic) > 1e-8 || std::abs(numeric) > 1e-8)) {
        outcome.ok = false;
      }
    }
  }
  return outcome;
}

void criterion_1_gradients() {
  Criterion c(1, "finite-difference gradients for every trainable sublayer (hidden 8)");
  const ModelConfig cfg = grad_config(14);
  ParameterStore store;
  Rng rng(211);
  GeneratorParams generator = build_generator(store, cfg, &rng);
  RewriterParams rewriter = build_rewriter(store, generator, &rng);
  MatcherParams matcher = build_matcher(store, cfg, &rng);

  const TokenSequence persona = {5, 6, kEosId, 7, 8, kEosId};
  const TokenSequence query = {9, 10, 11};
  const TokenSequence gold = {6, 12, 5};
  TokenSequence targets = gold;
  targets.push_back(kEosId);
  MaskedPrototype masked;
  masked.ids = {6, kMaskId, 5, kEosId};
  masked.masked_positions = {1};

  auto generator_loss = [&] {
    return cross_entropy_with_logits(teacher_forced_logits(persona, query, gold, generator),
                                     targets, kPadId);
  };
  auto rewriter_loss = [&] {
    return cross_entropy_with_logits(
        rewriter_teacher_forced_logits(masked, persona, gold, rewriter), targets, kPadId);
  };
  auto matcher_loss = [&] {
    return cross_entropy_with_logits(nli_logits(persona, masked.ids, matcher), {2}, -1);
  };

  std::vector<std::pair<std::string, Tensor>> g_params, r_params, d_params;
  for (const auto& entry : store.entries()) {
    const std::string& name = entry.first;
    if (name.rfind("generator.", 0) == 0 || name.rfind("shared.", 0) == 0) {
      g_params.push_back(entry);
    } else if (name.rfind("rewriter.", 0) == 0) {
      r_params.push_back(entry);
    } else if (name.rfind("matcher.", 0) == 0) {
      d_params.push_back(entry);
    }
  }
  // Shared encoder and embedding also feed the rewriter loss.
  for (const auto& entry : store.entries()) {
    if (entry.first.rfind("generator.encoder.", 0) == 0 || entry.first.rfind("shared.", 0) == 0) {
      r_params.push_back(entry);
    }
  }

  const GradOutcome g = check_gradients(g_params, generator_loss);
  const GradOutcome r = check_gradients(r_params, rewriter_loss);
  const GradOutcome d = check_gradients(d_params, matcher_loss);
  c.expect(g.ok, "generator-side gradient mismatch, worst rel " + fmt(g.worst));
  c.expect(r.ok, "rewriter-side gradient mismatch, worst rel " + fmt(r.worst));
  c.expect(d.ok, "matcher-side gradient mismatch, worst rel " + fmt(d.worst));
  c.note(std::to_string(g.checked + r.checked + d.checked) + " entries, worst rel " +
         fmt(std::max({g.worst, r.worst, d.worst})));
}

void criterion_2_oracles() {
  Criterion c(2, "attention, feed-forward, pooling and feature oracles (100 instances each)");
  Rng rng(223);
  double worst = 0.0;

  for (int trial = 0; trial < 100; ++trial) {
    // Multi-head attention against a per-head loop oracle.
    const std::size_t heads = 1 + rng.next_index(2);
    const std::size_t dh = 2 + rng.next_index(3);
    const std::size_t h = heads * dh;
    const std::size_t nq = 1 + rng.next_index(4), nk = 1 + rng.next_index(5);
    ParameterStore store;
    ParamBuilder b(store, &rng);
    AttentionParams p = b.attention("a" + std::to_string(trial), h, heads);
    const Tensor q = random_tensor({nq, h}, rng);
    const Tensor k = random_tensor({nk, h}, rng);
    const Tensor v = random_tensor({nk, h}, rng);
    const Tensor out = multi_head_attention(q, k, v, p);

    auto apply = [&](const Tensor& x, const LinearParams& lin, std::size_t rows,
                     std::vector<double>& res) {
      res.assign(rows * h, 0.0);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < h; ++j) {
          double acc = (*lin.bias.data)[j];
          for (std::size_t l = 0; l < h; ++l) acc += x.at(i, l) * lin.weight.at(l, j);
          res[i * h + j] = acc;
        }
    };
    std::vector<double> pq, pk, pv;
    apply(q, p.query, nq, pq);
    apply(k, p.key, nk, pk);
    apply(v, p.value, nk, pv);
    std::vector<double> merged(nq * h, 0.0);
    for (std::size_t head = 0; head < heads; ++head) {
      const std::size_t off = head * dh;
      for (std::size_t i = 0; i < nq; ++i) {
        std::vector<double> scores(nk, 0.0);
        for (std::size_t j = 0; j < nk; ++j) {
          double dot = 0.0;
          for (std::size_t cidx = 0; cidx < dh; ++cidx)
            dot += pq[i * h + off + cidx] * pk[j * h + off + cidx];
          scores[j] = dot / std::sqrt(static_cast<double>(dh));
        }
        const double maxv = *std::max_element(scores.begin(), scores.end());
        double sum = 0.0;
        for (double& s : scores) {
          s = std::exp(s - maxv);
          sum += s;
        }
        for (std::size_t j = 0; j < nk; ++j) {
          const double w = scores[j] / sum;
          for (std::size_t cidx = 0; cidx < dh; ++cidx)
            merged[i * h + off + cidx] += w * pv[j * h + off + cidx];
        }
      }
    }
    for (std::size_t i = 0; i < nq; ++i) {
      for (std::size_t j = 0; j < h; ++j) {
        double acc = (*p.output.bias.data)[j];
        for (std::size_t l = 0; l < h; ++l) acc += merged[i * h + l] * p.output.weight.at(l, j);
        worst = std::max(worst, std::abs(out.at(i, j) - acc));
      }
    }

    // Feed-forward against a triple loop.
    const std::size_t rows = 1 + rng.next_index(4), in = 2 + rng.next_index(4),
                      mid = 2 + rng.next_index(6);
    const Tensor x = random_tensor({rows, in}, rng);
    const Tensor w1 = random_tensor({in, mid}, rng);
    const Tensor b1 = random_tensor({1, mid}, rng);
    const Tensor w2 = random_tensor({mid, in}, rng);
    const Tensor b2 = random_tensor({1, in}, rng);
    const Tensor ff = feed_forward(x, w1, b1, w2, b2);
    for (std::size_t i = 0; i < rows; ++i) {
      std::vector<double> hline(mid, 0.0);
      for (std::size_t m = 0; m < mid; ++m) {
        double acc = (*b1.data)[m];
        for (std::size_t j = 0; j < in; ++j) acc += x.at(i, j) * w1.at(j, m);
        hline[m] = std::max(0.0, acc);
      }
      for (std::size_t j = 0; j < in; ++j) {
        double acc = (*b2.data)[j];
        for (std::size_t m = 0; m < mid; ++m) acc += hline[m] * w2.at(m, j);
        worst = std::max(worst, std::abs(ff.at(i, j) - acc));
      }
    }

    // Attentive pooling and match features against loop oracles.
    const std::size_t n = 1 + rng.next_index(5), m = 1 + rng.next_index(5),
                      hd = 2 + rng.next_index(5);
    const Tensor pa = random_tensor({n, hd}, rng);
    const Tensor pb = random_tensor({m, hd}, rng);
    const AttentivePooling pool = attentive_pool(pa, pb);
    std::vector<double> a0(hd, 0.0);
    for (std::size_t j = 0; j < hd; ++j) {
      for (std::size_t i = 0; i < n; ++i) a0[j] += pa.at(i, j);
      a0[j] /= static_cast<double>(n);
      worst = std::max(worst, std::abs(pool.premise_summary.at(0, j) - a0[j]));
    }
    std::vector<double> scores(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < hd; ++j) scores[i] += a0[j] * pb.at(i, j);
    const double maxs = *std::max_element(scores.begin(), scores.end());
    double ssum = 0.0;
    for (double& s : scores) {
      s = std::exp(s - maxs);
      ssum += s;
    }
    std::vector<double> btilde(hd, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double w = scores[i] / ssum;
      worst = std::max(worst, std::abs(pool.hypothesis_weights.at(0, i) - w));
      for (std::size_t j = 0; j < hd; ++j) btilde[j] += w * pb.at(i, j);
    }
    for (std::size_t j = 0; j < hd; ++j) {
      worst = std::max(worst, std::abs(pool.hypothesis_attentive.at(0, j) - btilde[j]));
    }

    const Tensor feats = match_features(pool.premise_attentive, pool.hypothesis_attentive);
    for (std::size_t j = 0; j < hd; ++j) {
      const double av = pool.premise_attentive.at(0, j);
      const double bv = pool.hypothesis_attentive.at(0, j);
      worst = std::max(worst, std::abs(feats.at(0, j) - av));
      worst = std::max(worst, std::abs(feats.at(0, hd + j) - bv));
      worst = std::max(worst, std::abs(feats.at(0, 2 * hd + j) - av * bv));
      worst = std::max(worst, std::abs(feats.at(0, 3 * hd + j) - (av - bv)));
    }
  }
  c.expect(worst < 1e-10, "worst absolute deviation " + fmt(worst));
  c.note("worst abs deviation " + fmt(worst));
}

void criterion_3_deletion_rule() {
  Criterion c(3, "deletion-count law and top-d targeting, lengths 1..64, all labels");
  Rng rng(227);
  bool all_ok = true;
  for (std::size_t m = 1; m <= 64 && all_ok; ++m) {
    Prototype proto;
    proto.ids = TokenSequence(m, 9);
    for (int rep = 0; rep < 3; ++rep) {
      std::vector<double> weights(m);
      for (double& w : weights) w = rng.next_double();
      if (rep == 1) {
        // Force ties to exercise the earliest-position rule.
        for (std::size_t i = 0; i < m; ++i) weights[i] = (i % 3 == 0) ? 0.5 : 0.1;
      }
      for (NliLabel label :
           {NliLabel::entailment, NliLabel::neutral, NliLabel::contradiction}) {
        MatchVerdict verdict;
        verdict.label = label;
        verdict.response_weights = weights;
        const MaskedPrototype masked = delete_words(proto, verdict, 0.10);
        const std::size_t expect =
            label == NliLabel::entailment
                ? 0
                : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(0.1 * m)));
        if (masked.masked_positions.size() != expect) all_ok = false;
        // Brute-force oracle: stable sort of indices by descending weight.
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
        std::vector<std::size_t> expected(order.begin(),
                                          order.begin() + static_cast<std::ptrdiff_t>(expect));
        std::sort(expected.begin(), expected.end());
        if (masked.masked_positions != expected) all_ok = false;
        for (std::size_t pos : masked.masked_positions) {
          if (masked.ids[pos] != kMaskId) all_ok = false;
        }
      }
    }
  }
  c.expect(all_ok, "deletion law violated");
}

void criterion_4_causality() {
  Criterion c(4, "bit-identical causality for generator and rewriter logits (50 trials)");
  bool all_ok = true;
  for (int trial = 0; trial < 50 && all_ok; ++trial) {
    Rng rng(1000 + trial);
    const ModelConfig cfg = grad_config(16);
    ParameterStore store;
    GeneratorParams generator = build_generator(store, cfg, &rng);
    RewriterParams rewriter = build_rewriter(store, generator, &rng);

    const std::size_t len = 3 + rng.next_index(5);
    TokenSequence persona = {5, 6, kEosId};
    TokenSequence query = {7, 8};
    TokenSequence gold(len);
    for (int& id : gold) id = 5 + static_cast<int>(rng.next_index(cfg.vocab_size - 5));
    MaskedPrototype masked;
    masked.ids = gold;
    masked.ids.push_back(kEosId);
    masked.ids[rng.next_index(len)] = kMaskId;

    const Tensor g_base = teacher_forced_logits(persona, query, gold, generator);
    const Tensor r_base = rewriter_teacher_forced_logits(masked, persona, gold, rewriter);

    const std::size_t flip = rng.next_index(len);
    TokenSequence mutated = gold;
    mutated[flip] = mutated[flip] == 5 ? 6 : 5;
    const Tensor g_out = teacher_forced_logits(persona, query, mutated, generator);
    const Tensor r_out = rewriter_teacher_forced_logits(masked, persona, mutated, rewriter);

    const std::size_t rows = flip + 1;  // rows 0..flip depend on earlier targets only
    if (std::memcmp(g_out.data->data(), g_base.data->data(),
                    rows * g_base.cols() * sizeof(double)) != 0) {
      all_ok = false;
    }
    if (std::memcmp(r_out.data->data(), r_base.data->data(),
                    rows * r_base.cols() * sizeof(double)) != 0) {
      all_ok = false;
    }
  }
  c.expect(all_ok, "a perturbed later target changed an earlier logits row");
}

struct DeskCorpus {
  SyntheticCorpus corpus;
  Vocab vocab;
  std::vector<TokenizedDialogue> test_set;
};

struct DeskMatcher {
  ParameterStore store;
  double accuracy = 0.0;
  double seconds = 0.0;
};

TrainingConfig desk_matcher_config() {
  TrainingConfig cfg;
  cfg.model.hidden = 48;
  cfg.model.ffn_inner = 96;
  cfg.model.layers_d = 1;
  cfg.max_steps = 6000;
  cfg.seed = 21;
  return cfg;
}

TrainingConfig desk_gdr_config(Variant variant) {
  TrainingConfig cfg;  // shipped defaults: hidden 12, 1+2 layers, 600 steps
  cfg.variant = variant;
  cfg.seed = 21;
  return cfg;
}

DeskCorpus& desk_corpus() {
  static DeskCorpus* data = [] {
    auto* d = new DeskCorpus();
    d->corpus = make_synthetic(SyntheticSpec{});
    d->vocab = build_vocab(corpus_texts(d->corpus));
    ModelConfig token_cfg = desk_gdr_config(Variant::g).model;
    token_cfg.vocab_size = d->vocab.size();
    for (const DialogueExample& ex : d->corpus.test) {
      d->test_set.push_back(tokenize_dialogue(ex, d->vocab, token_cfg));
    }
    return d;
  }();
  return *data;
}

DeskMatcher& desk_matcher() {
  static DeskMatcher* trained = [] {
    auto* m = new DeskMatcher();
    DeskCorpus& data = desk_corpus();
    const auto start = std::chrono::steady_clock::now();
    const MatcherTrainResult result = train_matcher(
        data.corpus.nli_train, data.corpus.nli_valid, data.vocab, desk_matcher_config(), m->store);
    m->seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    m->accuracy = result.final_accuracy;
    return m;
  }();
  return *trained;
}

void criterion_5_matcher_training() {
  Criterion c(5, "matcher reaches 0.90 held-out accuracy on the default corpus in 10 minutes");
  DeskMatcher& m = desk_matcher();
  c.expect(m.accuracy >= 0.90, "held-out accuracy " + fmt(m.accuracy) + " < 0.90");
  c.expect(m.seconds < 600.0, "training took " + fmt(m.seconds) + "s");
  c.note("accuracy " + fmt(m.accuracy) + " in " + fmt(m.seconds) + "s");
}

struct VariantResult {
  double ppl = 0.0;
  double judged_entailment = 0.0;
  double oracle_entailment = 0.0;
};

VariantResult run_variant(Variant variant, DeskCorpus& data, ParameterStore& matcher_store) {
  ParameterStore store;
  train_gdr(data.corpus.train, variant == Variant::gdr ? &matcher_store : nullptr, data.vocab,
            desk_gdr_config(variant), store);
  ModelBundle bundle = bind_bundle(store, data.vocab);
  if (variant == Variant::gdr) bundle.matcher = bind_matcher(matcher_store, data.vocab);
  const MatcherParams judge = bind_matcher(matcher_store, data.vocab);
  const EvalOutput out = evaluate(bundle, judge, data.test_set, variant);

  VariantResult result;
  result.ppl = out.report.ppl;
  result.judged_entailment = out.report.entailment_ratio;
  std::size_t oracle_hits = 0;
  for (std::size_t i = 0; i < out.traces.size(); ++i) {
    const std::string text = data.vocab.decode(out.traces[i].final_ids);
    if (oracle_entailed(data.corpus.test[i].persona, text)) ++oracle_hits;
  }
  result.oracle_entailment =
      static_cast<double>(oracle_hits) / static_cast<double>(out.traces.size());
  return result;
}

void criteria_6_7_ablation() {
  DeskCorpus& data = desk_corpus();
  ParameterStore& matcher_store = desk_matcher().store;
  VariantResult g, gr, gdr;
  {
    Criterion c(6, "held-out PPL ordering gdr < gr <= g (gr may tie gdr within 5%)");
    g = run_variant(Variant::g, data, matcher_store);
    gr = run_variant(Variant::gr, data, matcher_store);
    gdr = run_variant(Variant::gdr, data, matcher_store);
    c.expect(gdr.ppl < g.ppl, "ppl(gdr) " + fmt(gdr.ppl) + " !< ppl(g) " + fmt(g.ppl));
    c.expect(gr.ppl <= g.ppl, "ppl(gr) " + fmt(gr.ppl) + " > ppl(g) " + fmt(g.ppl));
    c.expect(gdr.ppl <= gr.ppl * 1.05,
             "ppl(gdr) " + fmt(gdr.ppl) + " above the 5% tie band of ppl(gr) " + fmt(gr.ppl));
    c.note("ppl g " + fmt(g.ppl) + ", gr " + fmt(gr.ppl) + ", gdr " + fmt(gdr.ppl));
  }
  {
    Criterion c(7, "entailment ratio: gdr >= g + 0.05 and within 0.05 of the template oracle");
    c.expect(gdr.judged_entailment >= g.judged_entailment + 0.05,
             "gap " + fmt(gdr.judged_entailment - g.judged_entailment) + " < 0.05");
    c.expect(std::abs(gdr.judged_entailment - gdr.oracle_entailment) <= 0.05,
             "gdr judge " + fmt(gdr.judged_entailment) + " vs oracle " +
                 fmt(gdr.oracle_entailment));
    c.expect(std::abs(g.judged_entailment - g.oracle_entailment) <= 0.05,
             "g judge " + fmt(g.judged_entailment) + " vs oracle " + fmt(g.oracle_entailment));
    c.note("ent g " + fmt(g.judged_entailment) + " (oracle " + fmt(g.oracle_entailment) +
           "), gdr " + fmt(gdr.judged_entailment) + " (oracle " + fmt(gdr.oracle_entailment) +
           ")");
  }
}

void criterion_8_metric_identities() {
  Criterion c(8, "metric identities: uniform-model PPL equals V; distinct-n worked examples");
  DeskCorpus& data = desk_corpus();
  ModelConfig cfg = desk_gdr_config(Variant::g).model;
  cfg.vocab_size = data.vocab.size();
  ParameterStore store;
  Rng rng(229);
  ModelBundle bundle;
  bundle.config = cfg;
  bundle.variant = Variant::g;
  bundle.generator = build_generator(store, cfg, &rng);
  for (double& v : *bundle.generator->out_proj.weight.data) v = 0.0;
  for (double& v : *bundle.generator->out_proj.bias.data) v = 0.0;
  const std::vector<TokenizedDialogue> subset(data.test_set.begin(),
                                              data.test_set.begin() + 50);
  const double ppl = perplexity(bundle, subset, Variant::g);
  c.expect(std::abs(ppl - static_cast<double>(data.vocab.size())) < 1e-9,
           "uniform ppl " + fmt(ppl) + " vs vocabulary " + std::to_string(data.vocab.size()));

  const Vocab words = build_vocab({"i like cats a b c d e"});
  const TokenSequence tokens = words.encode("i like cats like cats");
  const double d1 = distinct_n({tokens}, 1);
  const double d2 = distinct_n({tokens}, 2);
  c.expect(d1 == 0.6, "dist-1 " + fmt(d1) + " != 0.6");
  c.expect(d2 == 0.75, "dist-2 " + fmt(d2) + " != 0.75");
  std::vector<TokenSequence> repeated(100, words.encode("a b c d e"));
  const double d1r = distinct_n(repeated, 1);
  c.expect(d1r == 0.01, "pooled dist-1 " + fmt(d1r) + " != 0.01");
  c.note("uniform ppl " + fmt(ppl) + ", dist examples exact");
}

// --- criterion 9: CLI determinism ------------------------------------------

int run_cli(const std::string& cli, const std::string& args) {
  const std::string command = cli + " " + args + " > /dev/null 2>&1";
  const int raw = std::system(command.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string file_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return "<missing " + path + ">";
  return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

void criterion_9_determinism() {
  Criterion c(9, "identical CLI runs produce byte-identical checkpoints, logs and reports");
  const char* cli = std::getenv("GDR_CLI");
  if (!cli) {
    c.expect(false, "GDR_CLI is not set; cannot exercise the binary");
    return;
  }
  const fs::path root = fs::temp_directory_path() / "gdr_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string synth_flags =
      " --train-dialogues 120 --valid-dialogues 20 --test-dialogues 20"
      " --train-nli 120 --valid-nli 20 --test-nli 20 --values 6";
  const std::string model_flags = " --hidden 8 --ffn-inner 16 --layers-g 1 --layers-d 1"
                                  " --layers-r 1 --steps 40";
  bool ok = true;
  for (int run = 1; run <= 2 && ok; ++run) {
    const std::string dir = (root / ("run" + std::to_string(run))).string();
    ok = ok && run_cli(cli, "synth --out-dir " + dir + "/data" + synth_flags) == 0;
    ok = ok && run_cli(cli, "train-matcher --train " + dir + "/data/nli.jsonl --heldout " + dir +
                                "/data/nli.valid.jsonl --vocab " + dir +
                                "/data/vocab.txt --out-dir " + dir + "/matcher" + model_flags) == 0;
    ok = ok && run_cli(cli, "train-gdr --variant gdr --matcher " + dir +
                                "/matcher/matcher.gdr --train " + dir +
                                "/data/dialogues.jsonl --vocab " + dir +
                                "/data/vocab.txt --out-dir " + dir + "/model" + model_flags) == 0;
    ok = ok && run_cli(cli, "eval --checkpoint " + dir + "/model/model.gdr --matcher " + dir +
                                "/matcher/matcher.gdr --vocab " + dir +
                                "/data/vocab.txt --data " + dir +
                                "/data/dialogues.test.jsonl --out " + dir + "/report.json") == 0;
  }
  c.expect(ok, "a CLI command failed");
  if (ok) {
    const std::string r1 = (root / "run1").string();
    const std::string r2 = (root / "run2").string();
    for (const char* rel :
         {"data/dialogues.jsonl", "data/nli.jsonl", "data/vocab.txt", "matcher/matcher.gdr",
          "matcher/steps.jsonl", "model/model.gdr", "model/steps.jsonl", "report.json"}) {
      c.expect(file_bytes(r1 + "/" + rel) == file_bytes(r2 + "/" + rel),
               std::string(rel) + " differs between identical runs");
    }
  }
}

void criterion_10_variant_lattice() {
  Criterion c(10, "variant lattice: gdr replays gr and grdr step for step (100 steps)");
  SyntheticSpec spec;
  spec.train_dialogues = 400;
  spec.valid_dialogues = spec.test_dialogues = 20;
  spec.train_nli = 60;
  spec.valid_nli = spec.test_nli = 9;
  const SyntheticCorpus corpus = make_synthetic(spec);
  const Vocab vocab = build_vocab(corpus_texts(corpus));

  TrainingConfig base;
  base.model.hidden = 8;
  base.model.ffn_inner = 16;
  base.model.layers_g = base.model.layers_d = base.model.layers_r = 1;
  base.max_steps = 100;
  base.token_batch_size = 256;
  base.seed = 21;

  // Never-deleting matcher: a zero MLP lands on entailment by tie-break.
  ParameterStore matcher_store;
  {
    TrainingConfig mcfg = base;
    mcfg.variant = Variant::gdr;
    mcfg.model.vocab_size = vocab.size();
    Rng rng(233);
    build_matcher(matcher_store, mcfg.model, &rng);
    for (const auto& [name, tensor] : matcher_store.entries()) {
      if (name.rfind("matcher.mlp", 0) == 0) {
        for (double& v : *tensor.data) v = 0.0;
      }
    }
    write_model_meta(matcher_store, mcfg);
  }

  auto losses = [](const GdrTrainResult& r) {
    std::vector<std::pair<double, double>> out;
    for (const StepLog& s : r.steps) out.emplace_back(s.loss_g, s.loss_r);
    return out;
  };

  TrainingConfig gr_cfg = base;
  gr_cfg.variant = Variant::gr;
  ParameterStore gr_store;
  const auto gr = losses(train_gdr(corpus.train, nullptr, vocab, gr_cfg, gr_store));

  TrainingConfig gdr_as_gr = base;
  gdr_as_gr.variant = Variant::gdr;
  gdr_as_gr.warmup_steps = 0;
  ParameterStore s1;
  const auto gdr_gr = losses(train_gdr(corpus.train, &matcher_store, vocab, gdr_as_gr, s1));

  TrainingConfig grdr_cfg = base;
  grdr_cfg.variant = Variant::grdr;
  ParameterStore grdr_store;
  const auto grdr = losses(train_gdr(corpus.train, nullptr, vocab, grdr_cfg, grdr_store));

  TrainingConfig gdr_as_grdr = base;
  gdr_as_grdr.variant = Variant::gdr;
  gdr_as_grdr.warmup_steps = 1000000;  // the random masker stays active
  ParameterStore s2;
  const auto gdr_grdr = losses(train_gdr(corpus.train, &matcher_store, vocab, gdr_as_grdr, s2));

  bool gr_ok = gr.size() == gdr_gr.size();
  for (std::size_t i = 0; gr_ok && i < gr.size(); ++i) {
    gr_ok = std::abs(gr[i].first - gdr_gr[i].first) <= 1e-12 &&
            std::abs(gr[i].second - gdr_gr[i].second) <= 1e-12;
  }
  c.expect(gr_ok, "gdr with a never-deleting matcher diverged from gr");

  bool grdr_ok = grdr.size() == gdr_grdr.size();
  for (std::size_t i = 0; grdr_ok && i < grdr.size(); ++i) {
    grdr_ok = std::abs(grdr[i].first - gdr_grdr[i].first) <= 1e-12 &&
              std::abs(grdr[i].second - gdr_grdr[i].second) <= 1e-12;
  }
  c.expect(grdr_ok, "gdr inside the warm-up diverged from grdr");
  c.note(std::to_string(gr.size()) + " steps compared per pair");
}

}  // namespace

int main() {
  std::cout << "acceptance suite\n";
  const auto start = std::chrono::steady_clock::now();

  criterion_1_gradients();
  criterion_2_oracles();
  criterion_3_deletion_rule();
  criterion_4_causality();
  criterion_8_metric_identities();  // cheap; runs before the training-heavy ones
  criterion_10_variant_lattice();
  criterion_9_determinism();
  criterion_5_matcher_training();
  criteria_6_7_ablation();

  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << (g_failures == 0 ? "all criteria passed" : "criteria failed") << " ("
            << static_cast<int>(total) << "s total)\n";
  return g_failures == 0 ? 0 : 1;
}
