#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gdr/matcher.hpp"
#include "gdr/vocab.hpp"

namespace gdr {

struct DialogueExample {
  std::vector<std::string> persona;  // k >= 1 sentences, normalized text
  std::string query;
  std::string response;
};

struct NliExample {
  std::string premise;
  std::string hypothesis;
  NliLabel label = NliLabel::entailment;
};

// JSONL loaders. Lines are parsed in order; malformed lines or missing
// fields raise DataError naming the line number. Text fields come back
// normalized (lowercased, punctuation split off).
std::vector<DialogueExample> load_dialogues(const std::string& path);
std::vector<NliExample> load_nli(const std::string& path);

void save_dialogues(const std::vector<DialogueExample>& examples, const std::string& path);
void save_nli(const std::vector<NliExample>& examples, const std::string& path);

// Frequency vocabulary: reserved tokens first, then tokens with count >=
// min_count by descending frequency, ties broken lexicographically.
// max_size caps the total entry count including the reserved ids.
Vocab build_vocab(const std::vector<std::string>& corpora, std::size_t min_count = 1,
                  std::size_t max_size = 0);

// Template-based corpus standing in for full-scale dialogue/NLI data. Persona
// sentences instantiate one of up to three attribute families ("i like X",
// "my job is X", "i have a X"); queries probe one attribute; gold responses
// are entailed rephrasings. NLI triples pair a persona sentence with a
// response-form hypothesis whose label follows from the template structure,
// so ground truth is recomputable by template matching.
struct SyntheticSpec {
  std::uint64_t seed = 7;
  std::size_t attribute_count = 3;
  std::size_t values_per_attribute = 16;
  std::size_t train_dialogues = 2000;
  std::size_t valid_dialogues = 200;
  std::size_t test_dialogues = 200;
  std::size_t train_nli = 3000;
  std::size_t valid_nli = 300;
  std::size_t test_nli = 300;
  double entailment_fraction = 1.0 / 3.0;
  double neutral_fraction = 1.0 / 3.0;
  double contradiction_fraction = 1.0 / 3.0;

  void validate() const;
};

struct SyntheticCorpus {
  std::vector<DialogueExample> train;
  std::vector<DialogueExample> valid;
  std::vector<DialogueExample> test;
  std::vector<NliExample> nli_train;
  std::vector<NliExample> nli_valid;
  std::vector<NliExample> nli_test;
};

SyntheticCorpus make_synthetic(const SyntheticSpec& spec);

// Template oracle: parses a normalized sentence into its (attribute, value)
// slot, when it matches one of the generation templates.
std::optional<std::pair<std::string, std::string>> parse_template(const std::string& sentence);

// Multi-sentence premises are stored as one string with " . " separators.
std::vector<std::string> premise_sentences(const std::string& premise);

// Entailment beats contradiction when several premise sentences apply; a
// hypothesis whose attribute never appears is neutral.
NliLabel oracle_label(const std::string& premise, const std::string& hypothesis);

// A response is entailed when some persona sentence carries the same
// attribute with the same value.
bool oracle_entailed(const std::vector<std::string>& persona, const std::string& response);

// Every text field of every example, for vocabulary building.
std::vector<std::string> corpus_texts(const SyntheticCorpus& corpus);

}  // namespace gdr
