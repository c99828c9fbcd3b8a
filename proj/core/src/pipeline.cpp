#include "gdr/pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include "gdr/error.hpp"

namespace gdr {

namespace {
// Substream ids off the run seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kDeleteStream = 1;
constexpr std::uint64_t kRespondStream = 3;
}  // namespace

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::g:
      return "g";
    case Variant::gr:
      return "gr";
    case Variant::grdr:
      return "grdr";
    case Variant::gdr:
      return "gdr";
  }
  return "?";
}

std::optional<Variant> parse_variant(const std::string& name) {
  if (name == "g") return Variant::g;
  if (name == "gr") return Variant::gr;
  if (name == "grdr") return Variant::grdr;
  if (name == "gdr") return Variant::gdr;
  return std::nullopt;
}

void TrainingConfig::validate() const {
  model.validate();
  if (token_batch_size == 0) throw std::invalid_argument("TrainingConfig: zero batch size");
  if (max_steps == 0) throw std::invalid_argument("TrainingConfig: zero max_steps");
  if (lr_warmup_steps == 0) throw std::invalid_argument("TrainingConfig: zero lr warm-up");
  if (warmup_delete_prob < 0.0 || warmup_delete_prob > 1.0) {
    throw std::invalid_argument("TrainingConfig: warmup_delete_prob outside [0, 1]");
  }
  if (delete_fraction < 0.0 || delete_fraction > 1.0) {
    throw std::invalid_argument("TrainingConfig: delete_fraction outside [0, 1]");
  }
  if (train_decode_max_len == 0 || decode_max_len == 0) {
    throw std::invalid_argument("TrainingConfig: decode caps must be >= 1");
  }
  if (lr_scale <= 0.0) throw std::invalid_argument("TrainingConfig: lr_scale must be positive");
}

TokenizedDialogue tokenize_dialogue(const DialogueExample& ex, const Vocab& vocab,
                                    const ModelConfig& cfg) {
  if (ex.persona.empty()) throw DataError("dialogue example has no persona sentences");
  TokenizedDialogue out;
  for (const std::string& sentence : ex.persona) {
    TokenSequence ids = vocab.encode(sentence);
    if (ids.empty()) throw DataError("dialogue example has an empty persona sentence");
    out.persona_sentences.push_back(std::move(ids));
  }
  out.persona_unfolded = unfold_persona(out.persona_sentences, cfg.max_persona_len);
  out.query = vocab.encode(ex.query);
  out.response = vocab.encode(ex.response);
  if (out.query.empty() || out.response.empty()) {
    throw DataError("dialogue example has an empty query or response");
  }
  if (out.query.size() > cfg.max_query_len) {
    throw DataError("query length " + std::to_string(out.query.size()) + " exceeds maximum " +
                    std::to_string(cfg.max_query_len));
  }
  if (out.response.size() > cfg.max_response_len) {
    throw DataError("response length " + std::to_string(out.response.size()) +
                    " exceeds maximum " + std::to_string(cfg.max_response_len));
  }
  out.cost = out.persona_unfolded.size() + out.query.size() + out.response.size();
  return out;
}

TokenizedNli tokenize_nli(const NliExample& ex, const Vocab& vocab, const ModelConfig& cfg) {
  // The premise follows the persona unfold convention: sentences (split on
  // ".") each followed by EOS, exactly what the matcher sees at pipeline time.
  TokenizedNli out;
  for (const std::string& sentence : premise_sentences(ex.premise)) {
    const TokenSequence ids = vocab.encode(sentence);
    if (ids.empty()) throw DataError("nli example has an empty premise sentence");
    out.premise.insert(out.premise.end(), ids.begin(), ids.end());
    out.premise.push_back(kEosId);
  }
  out.hypothesis = vocab.encode(ex.hypothesis);
  if (out.premise.empty() || out.hypothesis.empty()) {
    throw DataError("nli example has an empty premise or hypothesis");
  }
  out.hypothesis.push_back(kEosId);
  if (out.premise.size() > cfg.max_persona_len || out.hypothesis.size() > cfg.max_persona_len) {
    throw DataError("nli example exceeds the maximum sequence length");
  }
  out.label = static_cast<int>(ex.label);
  out.cost = out.premise.size() + out.hypothesis.size();
  return out;
}

std::vector<std::vector<std::size_t>> pack_batches(const std::vector<std::size_t>& costs,
                                                   std::size_t token_budget) {
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> current;
  std::size_t current_cost = 0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (!current.empty() && current_cost + costs[i] > token_budget) {
      batches.push_back(std::move(current));
      current.clear();
      current_cost = 0;
    }
    current.push_back(i);
    current_cost += costs[i];
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

MaskedPrototype random_delete(const Prototype& prototype, double p, Rng& rng) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("random_delete: p outside [0, 1]");
  MaskedPrototype masked;
  masked.ids = prototype.ids;
  for (std::size_t i = 0; i < masked.ids.size(); ++i) {
    if (rng.next_double() < p) {
      masked.ids[i] = kMaskId;
      masked.masked_positions.push_back(i);
    }
  }
  return masked;
}

// --- matcher training --------------------------------------------------------

double matcher_accuracy(const MatcherParams& matcher, const Vocab& vocab,
                        const std::vector<NliExample>& examples, const ModelConfig& cfg) {
  if (examples.empty()) throw std::invalid_argument("matcher_accuracy: empty example set");
  NoGradGuard no_grad;
  std::size_t correct = 0;
  for (const NliExample& ex : examples) {
    const TokenizedNli t = tokenize_nli(ex, vocab, cfg);
    const MatchVerdict verdict = match(t.premise, t.hypothesis, matcher);
    if (static_cast<int>(verdict.label) == t.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

MatcherTrainResult train_matcher(const std::vector<NliExample>& train,
                                 const std::vector<NliExample>& heldout, const Vocab& vocab,
                                 const TrainingConfig& cfg, ParameterStore& store) {
  TrainingConfig local = cfg;
  local.model.vocab_size = vocab.size();
  local.validate();
  if (train.empty()) throw DataError("train_matcher: empty training data");
  bool seen_label[3] = {false, false, false};
  for (const NliExample& ex : train) seen_label[static_cast<int>(ex.label)] = true;
  if (!seen_label[0] || !seen_label[1] || !seen_label[2]) {
    throw DataError("train_matcher: training data must contain every label");
  }

  std::vector<TokenizedNli> tokenized;
  tokenized.reserve(train.size());
  std::vector<std::size_t> costs;
  for (const NliExample& ex : train) {
    tokenized.push_back(tokenize_nli(ex, vocab, local.model));
    costs.push_back(tokenized.back().cost);
  }
  const auto batches = pack_batches(costs, local.token_batch_size);

  Rng init_rng = Rng(local.seed).fork(kInitStream);
  MatcherParams matcher = build_matcher(store, local.model, &init_rng);

  AdamState adam;
  adam.beta1 = local.adam_beta1;
  adam.beta2 = local.adam_beta2;
  adam.eps = local.adam_eps;
  adam.base_lr = local.lr_scale;

  MatcherTrainResult result;
  std::size_t step = 0;
  while (step < local.max_steps) {
    for (const auto& batch : batches) {
      if (step >= local.max_steps) break;
      ++step;
      const double lr = lr_schedule(step, local.lr_warmup_steps, local.model.hidden);
      try {
        Tensor loss;
        const double weight = 1.0 / static_cast<double>(batch.size());
        for (std::size_t idx : batch) {
          const TokenizedNli& ex = tokenized[idx];
          Tensor logits = nli_logits(ex.premise, ex.hypothesis, matcher);
          Tensor ce = cross_entropy_with_logits(logits, {ex.label}, /*pad_id=*/-1);
          Tensor weighted = scale(ce, weight);
          loss = loss.defined() ? add(loss, weighted) : weighted;
        }
        const double loss_value = loss.scalar();
        if (!std::isfinite(loss_value)) {
          throw NumericError("train_matcher: non-finite loss");
        }
        loss.backward();
        adam_step(store, adam, lr);
        result.steps.push_back({step, "matcher-train", loss_value, 0.0, adam.base_lr * lr});
      } catch (const NumericError& e) {
        throw NumericError("step " + std::to_string(step) + ": " + e.what());
      }
    }
    if (!heldout.empty()) {
      result.epoch_accuracy.push_back(matcher_accuracy(matcher, vocab, heldout, local.model));
    }
  }
  if (!heldout.empty()) {
    result.final_accuracy = result.epoch_accuracy.empty()
                                ? matcher_accuracy(matcher, vocab, heldout, local.model)
                                : result.epoch_accuracy.back();
  }
  write_model_meta(store, local);
  return result;
}

// --- generator/rewriter training ---------------------------------------------

GdrTrainResult train_gdr(const std::vector<DialogueExample>& train,
                         const ParameterStore* matcher_store, const Vocab& vocab,
                         const TrainingConfig& cfg, ParameterStore& store) {
  TrainingConfig local = cfg;
  local.model.vocab_size = vocab.size();
  local.validate();
  if (train.empty()) throw DataError("train_gdr: empty training data");
  if (local.variant == Variant::gdr && matcher_store == nullptr) {
    throw std::invalid_argument("train_gdr: the gdr variant needs a trained matcher");
  }

  std::vector<TokenizedDialogue> tokenized;
  tokenized.reserve(train.size());
  std::vector<std::size_t> costs;
  for (const DialogueExample& ex : train) {
    tokenized.push_back(tokenize_dialogue(ex, vocab, local.model));
    costs.push_back(tokenized.back().cost);
  }
  const auto batches = pack_batches(costs, local.token_batch_size);

  Rng master(local.seed);
  Rng init_rng = master.fork(kInitStream);
  GeneratorParams generator = build_generator(store, local.model, &init_rng);
  std::optional<RewriterParams> rewriter;
  if (local.variant != Variant::g) {
    rewriter = build_rewriter(store, generator, &init_rng);
  }
  std::optional<MatcherParams> matcher;
  if (local.variant == Variant::gdr) {
    matcher = bind_matcher(*matcher_store, vocab);
  }

  Rng delete_rng = master.fork(kDeleteStream);

  AdamState adam;
  adam.beta1 = local.adam_beta1;
  adam.beta2 = local.adam_beta2;
  adam.eps = local.adam_eps;
  adam.base_lr = local.lr_scale;

  GdrTrainResult result;
  std::size_t step = 0;
  while (step < local.max_steps) {
    for (const auto& batch : batches) {
      if (step >= local.max_steps) break;
      ++step;
      const double lr = lr_schedule(step, local.lr_warmup_steps, local.model.hidden);
      const bool random_phase = step <= local.warmup_steps;
      std::string phase = "none";
      if (local.variant == Variant::grdr) {
        phase = "warmup";
      } else if (local.variant == Variant::gdr) {
        phase = random_phase ? "warmup" : "matcher";
      }
      try {
        // Token-weighted generator loss over the batch.
        std::size_t total_targets = 0;
        for (std::size_t idx : batch) total_targets += tokenized[idx].response.size() + 1;

        Tensor loss_g;
        Tensor loss_r;
        for (std::size_t idx : batch) {
          const TokenizedDialogue& ex = tokenized[idx];
          TokenSequence targets = ex.response;
          targets.push_back(kEosId);
          const double weight =
              static_cast<double>(targets.size()) / static_cast<double>(total_targets);

          Tensor g_logits =
              teacher_forced_logits(ex.persona_unfolded, ex.query, ex.response, generator);
          Tensor g_ce = scale(cross_entropy_with_logits(g_logits, targets, kPadId), weight);
          loss_g = loss_g.defined() ? add(loss_g, g_ce) : g_ce;

          if (local.variant == Variant::g) continue;

          const Prototype proto = generate_prototype(ex.persona_unfolded, ex.query, generator,
                                                     local.train_decode_max_len);
          MaskedPrototype masked;
          switch (local.variant) {
            case Variant::gr:
              masked.ids = proto.ids;
              break;
            case Variant::grdr:
              masked = random_delete(proto, local.warmup_delete_prob, delete_rng);
              break;
            case Variant::gdr:
              if (random_phase) {
                masked = random_delete(proto, local.warmup_delete_prob, delete_rng);
              } else {
                const MatchVerdict verdict = match(ex.persona_unfolded, proto.ids, *matcher);
                masked = delete_words(proto, verdict, local.delete_fraction);
              }
              break;
            case Variant::g:
              break;
          }
          Tensor r_logits =
              rewriter_teacher_forced_logits(masked, ex.persona_unfolded, ex.response, *rewriter);
          Tensor r_ce = scale(cross_entropy_with_logits(r_logits, targets, kPadId), weight);
          loss_r = loss_r.defined() ? add(loss_r, r_ce) : r_ce;
        }

        const double loss_g_value = loss_g.scalar();
        const double loss_r_value = loss_r.defined() ? loss_r.scalar() : 0.0;
        if (!std::isfinite(loss_g_value) || !std::isfinite(loss_r_value)) {
          throw NumericError("train_gdr: non-finite loss");
        }
        Tensor total = loss_r.defined() ? add(loss_g, loss_r) : loss_g;
        if (std::abs(total.scalar() - (loss_g_value + loss_r_value)) > 1e-12) {
          throw NumericError("train_gdr: total loss is not the sum of stage losses");
        }
        total.backward();
        adam_step(store, adam, lr);
        result.steps.push_back({step, phase, loss_g_value, loss_r_value, adam.base_lr * lr});
      } catch (const NumericError& e) {
        throw NumericError("step " + std::to_string(step) + ": " + e.what());
      }
    }
  }
  write_model_meta(store, local);
  return result;
}

// --- checkpoint metadata and binding -----------------------------------------

void write_model_meta(ParameterStore& store, const TrainingConfig& cfg) {
  const ModelConfig& m = cfg.model;
  put_meta(store, "meta.hidden", static_cast<double>(m.hidden));
  put_meta(store, "meta.heads", static_cast<double>(m.heads));
  put_meta(store, "meta.ffn_inner", static_cast<double>(m.ffn_inner));
  put_meta(store, "meta.layers_g", static_cast<double>(m.layers_g));
  put_meta(store, "meta.layers_d", static_cast<double>(m.layers_d));
  put_meta(store, "meta.layers_r", static_cast<double>(m.layers_r));
  put_meta(store, "meta.vocab_size", static_cast<double>(m.vocab_size));
  put_meta(store, "meta.horizon", static_cast<double>(m.horizon));
  put_meta(store, "meta.max_query_len", static_cast<double>(m.max_query_len));
  put_meta(store, "meta.max_response_len", static_cast<double>(m.max_response_len));
  put_meta(store, "meta.max_persona_len", static_cast<double>(m.max_persona_len));
  put_meta(store, "meta.variant", static_cast<double>(static_cast<int>(cfg.variant)));
  put_meta(store, "meta.seed", static_cast<double>(cfg.seed));
  put_meta(store, "meta.delete_fraction", cfg.delete_fraction);
  put_meta(store, "meta.warmup_delete_prob", cfg.warmup_delete_prob);
  put_meta(store, "meta.decode_max_len", static_cast<double>(cfg.decode_max_len));
}

ModelConfig read_model_config(const ParameterStore& store) {
  ModelConfig cfg;
  cfg.hidden = static_cast<std::size_t>(get_meta(store, "meta.hidden"));
  cfg.heads = static_cast<std::size_t>(get_meta(store, "meta.heads"));
  cfg.ffn_inner = static_cast<std::size_t>(get_meta(store, "meta.ffn_inner"));
  cfg.layers_g = static_cast<std::size_t>(get_meta(store, "meta.layers_g"));
  cfg.layers_d = static_cast<std::size_t>(get_meta(store, "meta.layers_d"));
  cfg.layers_r = static_cast<std::size_t>(get_meta(store, "meta.layers_r"));
  cfg.vocab_size = static_cast<std::size_t>(get_meta(store, "meta.vocab_size"));
  cfg.horizon = static_cast<std::size_t>(get_meta(store, "meta.horizon"));
  cfg.max_query_len = static_cast<std::size_t>(get_meta(store, "meta.max_query_len"));
  cfg.max_response_len = static_cast<std::size_t>(get_meta(store, "meta.max_response_len"));
  cfg.max_persona_len = static_cast<std::size_t>(get_meta(store, "meta.max_persona_len"));
  return cfg;
}

Variant read_model_variant(const ParameterStore& store) {
  const int v = static_cast<int>(get_meta(store, "meta.variant"));
  if (v < 0 || v > 3) throw DataError("checkpoint: invalid variant id " + std::to_string(v));
  return static_cast<Variant>(v);
}

MatcherParams bind_matcher(const ParameterStore& store, const Vocab& vocab) {
  ModelConfig cfg = read_model_config(store);
  if (cfg.vocab_size != vocab.size()) {
    throw DataError("checkpoint: vocabulary size " + std::to_string(vocab.size()) +
                    " does not match checkpoint (" + std::to_string(cfg.vocab_size) + ")");
  }
  // Tensor handles in the copy share storage with the caller's entries.
  ParameterStore copy = store;
  return build_matcher(copy, cfg, nullptr);
}

ModelBundle bind_bundle(const ParameterStore& store, const Vocab& vocab) {
  ModelBundle bundle;
  bundle.config = read_model_config(store);
  if (bundle.config.vocab_size != vocab.size()) {
    throw DataError("checkpoint: vocabulary size " + std::to_string(vocab.size()) +
                    " does not match checkpoint (" + std::to_string(bundle.config.vocab_size) +
                    ")");
  }
  bundle.variant = read_model_variant(store);
  bundle.seed = static_cast<std::uint64_t>(get_meta(store, "meta.seed"));
  bundle.delete_fraction = get_meta(store, "meta.delete_fraction");
  bundle.random_delete_prob = get_meta(store, "meta.warmup_delete_prob");
  bundle.decode_max_len = static_cast<std::size_t>(get_meta(store, "meta.decode_max_len"));
  ParameterStore copy = store;
  if (copy.has_prefix("generator.")) {
    bundle.generator = build_generator(copy, bundle.config, nullptr);
    if (copy.has_prefix("rewriter.")) {
      bundle.rewriter = build_rewriter(copy, *bundle.generator, nullptr);
    }
  }
  if (copy.has_prefix("matcher.")) {
    bundle.matcher = build_matcher(copy, bundle.config, nullptr);
  }
  return bundle;
}

// --- inference ----------------------------------------------------------------

PipelineTrace respond(const TokenizedDialogue& input, const ModelBundle& bundle, Variant variant) {
  if (!bundle.generator) throw std::invalid_argument("respond: checkpoint has no generator");
  if (variant != Variant::g && !bundle.rewriter) {
    throw std::invalid_argument("respond: variant " + std::string(variant_name(variant)) +
                                " needs rewriter parameters");
  }
  if (variant == Variant::gdr && !bundle.matcher) {
    throw std::invalid_argument("respond: variant gdr needs matcher parameters");
  }

  PipelineTrace trace;
  trace.prototype = generate_prototype(input.persona_unfolded, input.query, *bundle.generator,
                                       bundle.decode_max_len);
  if (variant == Variant::g) {
    trace.final_ids = trace.prototype.ids;
    return trace;
  }

  MaskedPrototype masked;
  switch (variant) {
    case Variant::gr:
      masked.ids = trace.prototype.ids;
      break;
    case Variant::grdr: {
      Rng rng = Rng(bundle.seed).fork(kRespondStream);
      masked = random_delete(trace.prototype, bundle.random_delete_prob, rng);
      break;
    }
    case Variant::gdr: {
      trace.verdict = match(input.persona_unfolded, trace.prototype.ids, *bundle.matcher);
      masked = delete_words(trace.prototype, *trace.verdict, bundle.delete_fraction);
      break;
    }
    case Variant::g:
      break;
  }
  trace.masked = masked;
  trace.final_ids =
      rewrite(masked, input.persona_unfolded, *bundle.rewriter, bundle.decode_max_len);
  return trace;
}

PipelineTrace respond(const std::vector<std::string>& persona, const std::string& query,
                      const Vocab& vocab, const ModelBundle& bundle, Variant variant) {
  TokenizedDialogue input;
  for (const std::string& sentence : persona) {
    TokenSequence ids = vocab.encode(sentence);
    if (ids.empty()) throw DataError("respond: empty persona sentence");
    input.persona_sentences.push_back(std::move(ids));
  }
  if (input.persona_sentences.empty()) throw DataError("respond: no persona sentences");
  input.persona_unfolded =
      unfold_persona(input.persona_sentences, bundle.config.max_persona_len);
  input.query = vocab.encode(query);
  if (input.query.empty()) throw DataError("respond: empty query");
  if (input.query.size() > bundle.config.max_query_len) {
    throw DataError("respond: query length " + std::to_string(input.query.size()) +
                    " exceeds maximum " + std::to_string(bundle.config.max_query_len));
  }
  return respond(input, bundle, variant);
}

}  // namespace gdr
