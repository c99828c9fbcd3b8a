#pragma once

#include <optional>
#include <string>

#include "gdr/data.hpp"
#include "gdr/optim.hpp"
#include "gdr/rewriter.hpp"

namespace gdr {

enum class Variant { g, gr, grdr, gdr };

const char* variant_name(Variant v);
std::optional<Variant> parse_variant(const std::string& name);

struct TrainingConfig {
  ModelConfig model;
  std::size_t token_batch_size = 512;
  // Masking warm-up horizon: steps <= warmup_steps mask randomly, later steps
  // use the trained matcher (gdr variant only).
  std::size_t warmup_steps = 200;
  // Learning-rate schedule warm-up, configured independently at desk scale.
  std::size_t lr_warmup_steps = 200;
  double warmup_delete_prob = 0.10;
  double delete_fraction = 0.10;
  std::size_t max_steps = 600;
  std::uint64_t seed = 21;
  double lr_scale = 0.3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_eps = 1e-9;
  // Prototype length cap while training; inference uses decode_max_len.
  std::size_t train_decode_max_len = 16;
  std::size_t decode_max_len = 32;
  Variant variant = Variant::gdr;

  void validate() const;
};

struct StepLog {
  std::size_t step = 0;
  std::string phase;  // masking source: "warmup", "matcher", "none", "matcher-train"
  double loss_g = 0.0;
  double loss_r = 0.0;
  double lr = 0.0;
};

struct TokenizedDialogue {
  std::vector<TokenSequence> persona_sentences;
  TokenSequence persona_unfolded;  // EOS separator after each sentence
  TokenSequence query;
  TokenSequence response;
  std::size_t cost = 0;  // total tokens, used for batch packing
};

TokenizedDialogue tokenize_dialogue(const DialogueExample& ex, const Vocab& vocab,
                                    const ModelConfig& cfg);

// Premise/hypothesis sequences follow the single-sentence unfold convention:
// tokens plus one trailing EOS, matching what the matcher sees at pipeline
// time.
struct TokenizedNli {
  TokenSequence premise;
  TokenSequence hypothesis;
  int label = 0;
  std::size_t cost = 0;
};

TokenizedNli tokenize_nli(const NliExample& ex, const Vocab& vocab, const ModelConfig& cfg);

// Greedy in-order packing: grow the batch until the next example would push
// the token total past the budget; every batch holds at least one example.
std::vector<std::vector<std::size_t>> pack_batches(const std::vector<std::size_t>& costs,
                                                   std::size_t token_budget);

// Each position is masked independently with probability p, drawing from the
// given stream.
MaskedPrototype random_delete(const Prototype& prototype, double p, Rng& rng);

struct MatcherTrainResult {
  std::vector<StepLog> steps;
  std::vector<double> epoch_accuracy;  // held-out accuracy after each pass
  double final_accuracy = 0.0;
};

// Trains the consistency matcher on NLI triples with Adam and the warm-up
// schedule; parameters land in `store` under "matcher." plus meta entries.
MatcherTrainResult train_matcher(const std::vector<NliExample>& train,
                                 const std::vector<NliExample>& heldout, const Vocab& vocab,
                                 const TrainingConfig& cfg, ParameterStore& store);

double matcher_accuracy(const MatcherParams& matcher, const Vocab& vocab,
                        const std::vector<NliExample>& examples, const ModelConfig& cfg);

struct GdrTrainResult {
  std::vector<StepLog> steps;
};

// Joint MLE training of generator (and rewriter, per variant). Per batch:
// teacher-forced generator loss against gold; a greedy prototype decoded from
// the current generator with no gradient flow; masking by the phase rule;
// teacher-forced rewriter loss against the same gold; one Adam step over the
// summed loss. The matcher store is required for the gdr variant and is
// never updated.
GdrTrainResult train_gdr(const std::vector<DialogueExample>& train,
                         const ParameterStore* matcher_store, const Vocab& vocab,
                         const TrainingConfig& cfg, ParameterStore& store);

// Bound models over a parameter store (fresh or loaded from a checkpoint).
struct ModelBundle {
  ModelConfig config;
  Variant variant = Variant::g;
  std::optional<GeneratorParams> generator;
  std::optional<RewriterParams> rewriter;
  std::optional<MatcherParams> matcher;
  std::uint64_t seed = 1;
  double delete_fraction = 0.10;
  double random_delete_prob = 0.10;
  std::size_t decode_max_len = 32;
};

// Checkpoint self-description. Written once after training.
void write_model_meta(ParameterStore& store, const TrainingConfig& cfg);
ModelConfig read_model_config(const ParameterStore& store);
Variant read_model_variant(const ParameterStore& store);

// Binds whatever models the store holds; validates against the vocabulary.
ModelBundle bind_bundle(const ParameterStore& store, const Vocab& vocab);
MatcherParams bind_matcher(const ParameterStore& store, const Vocab& vocab);

struct PipelineTrace {
  Prototype prototype;
  std::optional<MatchVerdict> verdict;
  std::optional<MaskedPrototype> masked;
  TokenSequence final_ids;
};

// Full inference pass for one query under the given variant. Deterministic:
// the grdr variant draws its random masks from a stream derived from the
// bundle seed for every call.
PipelineTrace respond(const TokenizedDialogue& input, const ModelBundle& bundle, Variant variant);
PipelineTrace respond(const std::vector<std::string>& persona, const std::string& query,
                      const Vocab& vocab, const ModelBundle& bundle, Variant variant);

}  // namespace gdr
