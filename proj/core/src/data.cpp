#include "gdr/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gdr/error.hpp"
#include "gdr/rng.hpp"

namespace gdr {

namespace {

std::string normalize(const std::string& text) {
  const std::vector<std::string> tokens = tokenize(text);
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

nlohmann::json parse_line(const std::string& line, const std::string& path, std::size_t line_no) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ":" + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
  }
}

std::string require_string(const nlohmann::json& obj, const char* field, const std::string& path,
                           std::size_t line_no) {
  if (!obj.contains(field) || !obj[field].is_string()) {
    throw DataError(path + ":" + std::to_string(line_no) + ": missing string field '" + field +
                    "'");
  }
  return obj[field].get<std::string>();
}

}  // namespace

std::vector<DialogueExample> load_dialogues(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("load_dialogues: cannot open '" + path + "'");
  std::vector<DialogueExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const nlohmann::json obj = parse_line(line, path, line_no);
    if (!obj.contains("persona") || !obj["persona"].is_array()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": missing array field 'persona'");
    }
    DialogueExample ex;
    for (const auto& sentence : obj["persona"]) {
      if (!sentence.is_string()) {
        throw DataError(path + ":" + std::to_string(line_no) + ": persona entries must be strings");
      }
      ex.persona.push_back(normalize(sentence.get<std::string>()));
      if (ex.persona.back().empty()) {
        throw DataError(path + ":" + std::to_string(line_no) + ": empty persona sentence");
      }
    }
    if (ex.persona.empty()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": empty persona list");
    }
    ex.query = normalize(require_string(obj, "query", path, line_no));
    ex.response = normalize(require_string(obj, "response", path, line_no));
    if (ex.query.empty() || ex.response.empty()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": empty query or response");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<NliExample> load_nli(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("load_nli: cannot open '" + path + "'");
  std::vector<NliExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const nlohmann::json obj = parse_line(line, path, line_no);
    NliExample ex;
    ex.premise = normalize(require_string(obj, "premise", path, line_no));
    ex.hypothesis = normalize(require_string(obj, "hypothesis", path, line_no));
    if (ex.premise.empty() || ex.hypothesis.empty()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": empty premise or hypothesis");
    }
    const std::string label = require_string(obj, "label", path, line_no);
    const auto parsed = parse_nli_label(label);
    if (!parsed) {
      throw DataError(path + ":" + std::to_string(line_no) + ": unknown label '" + label + "'");
    }
    ex.label = *parsed;
    out.push_back(std::move(ex));
  }
  return out;
}

void save_dialogues(const std::vector<DialogueExample>& examples, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("save_dialogues: cannot open '" + path + "' for writing");
  for (const DialogueExample& ex : examples) {
    nlohmann::ordered_json obj;
    obj["persona"] = ex.persona;
    obj["query"] = ex.query;
    obj["response"] = ex.response;
    os << obj.dump() << '\n';
  }
  if (!os) throw DataError("save_dialogues: write to '" + path + "' failed");
}

void save_nli(const std::vector<NliExample>& examples, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("save_nli: cannot open '" + path + "' for writing");
  for (const NliExample& ex : examples) {
    nlohmann::ordered_json obj;
    obj["premise"] = ex.premise;
    obj["hypothesis"] = ex.hypothesis;
    obj["label"] = nli_label_name(ex.label);
    os << obj.dump() << '\n';
  }
  if (!os) throw DataError("save_nli: write to '" + path + "' failed");
}

Vocab build_vocab(const std::vector<std::string>& corpora, std::size_t min_count,
                  std::size_t max_size) {
  if (corpora.empty()) throw std::invalid_argument("build_vocab: no corpora");
  std::map<std::string, std::size_t> counts;
  for (const std::string& text : corpora) {
    for (const std::string& tok : tokenize(text)) ++counts[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  const std::size_t cap = max_size == 0 ? std::numeric_limits<std::size_t>::max() : max_size;
  for (const auto& [tok, count] : ranked) {
    if (count < min_count) continue;
    if (tokens.size() + Vocab::reserved().size() >= cap) break;
    tokens.push_back(tok);
  }
  return Vocab::from_tokens(tokens);
}

// --- synthetic templates ---------------------------------------------------

namespace {

struct AttributeFamily {
  const char* name;
  const char* persona_pattern;                 // "%" is the value slot
  std::vector<const char*> queries;            // paraphrases probing the slot
  std::vector<const char*> response_patterns;  // all entailed rephrasings
  std::vector<const char*> values;
};

const std::vector<AttributeFamily>& families() {
  static const std::vector<AttributeFamily> kFamilies = {
      {"like",
       "i like %",
       {"what do you like ?", "what are you into ?"},
       {"i like %", "i love %"},
       {"tea", "coffee", "soccer", "chess", "hiking", "jazz", "sushi", "pizza", "skiing",
        "painting", "baseball", "cycling", "gardening", "poetry", "surfing", "astronomy"}},
      {"job",
       "my job is %",
       {"what is your job ?", "what do you do for work ?"},
       {"my job is %", "i work as a %"},
       {"teacher", "doctor", "farmer", "pilot", "chef", "nurse", "artist", "lawyer", "plumber",
        "singer", "writer", "barber", "tailor", "florist", "baker", "dentist"}},
      {"pet",
       "i have a %",
       {"do you have a pet ?", "any pets at home ?"},
       {"i have a %", "my pet is a %"},
       {"dog", "cat", "bird", "rabbit", "hamster", "turtle", "snake", "pony", "ferret", "parrot",
        "gecko", "goat", "duck", "goldfish", "donkey", "owl"}},
  };
  return kFamilies;
}

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  for (const std::string& tok : tokenize(text)) {
    if (tok == ".") {
      if (!current.empty()) out.push_back(current);
      current.clear();
      continue;
    }
    if (!current.empty()) current.push_back(' ');
    current += tok;
  }
  if (!current.empty()) out.push_back(current);
  return out;
}

std::string fill(const char* pattern, const std::string& value) {
  std::string out(pattern);
  const std::size_t slot = out.find('%');
  out.replace(slot, 1, value);
  return out;
}

// Matches "prefix value" where pattern is "prefix %" and value is one word.
std::optional<std::string> match_pattern(const char* pattern, const std::string& sentence) {
  const std::string pat(pattern);
  const std::size_t slot = pat.find('%');
  const std::string prefix = pat.substr(0, slot);
  if (sentence.size() <= prefix.size()) return std::nullopt;
  if (sentence.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
  const std::string value = sentence.substr(prefix.size());
  if (value.empty() || value.find(' ') != std::string::npos) return std::nullopt;
  return value;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (attribute_count == 0 || attribute_count > families().size()) {
    throw std::invalid_argument("SyntheticSpec: attribute_count must be in [1, " +
                                std::to_string(families().size()) + "]");
  }
  for (const AttributeFamily& fam : families()) {
    if (values_per_attribute > fam.values.size()) {
      throw std::invalid_argument("SyntheticSpec: values_per_attribute " +
                                  std::to_string(values_per_attribute) +
                                  " exceeds the template space of '" + std::string(fam.name) +
                                  "' (" + std::to_string(fam.values.size()) + ")");
    }
  }
  if (values_per_attribute == 0) {
    throw std::invalid_argument("SyntheticSpec: values_per_attribute must be positive");
  }
  if (train_dialogues == 0 || valid_dialogues == 0 || test_dialogues == 0 || train_nli == 0 ||
      valid_nli == 0 || test_nli == 0) {
    throw std::invalid_argument("SyntheticSpec: split sizes must be positive");
  }
  const double mix = entailment_fraction + neutral_fraction + contradiction_fraction;
  if (entailment_fraction < 0 || neutral_fraction < 0 || contradiction_fraction < 0 ||
      std::abs(mix - 1.0) > 1e-9) {
    throw std::invalid_argument("SyntheticSpec: label mix must be nonnegative and sum to 1");
  }
  if (neutral_fraction > 0 && attribute_count < 2) {
    throw std::invalid_argument("SyntheticSpec: neutral labels need at least 2 attributes");
  }
  if (contradiction_fraction > 0 && values_per_attribute < 2) {
    throw std::invalid_argument("SyntheticSpec: contradiction labels need at least 2 values");
  }
}

namespace {

std::vector<DialogueExample> make_dialogues(const SyntheticSpec& spec, std::size_t count,
                                            Rng& rng) {
  // Personas carry one sentence per attribute family, so every query has
  // distractor sentences to route around.
  std::vector<DialogueExample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    DialogueExample ex;
    std::vector<std::string> values(spec.attribute_count);
    for (std::size_t c = 0; c < spec.attribute_count; ++c) {
      const AttributeFamily& fam = families()[c];
      values[c] = fam.values[rng.next_index(spec.values_per_attribute)];
      ex.persona.push_back(fill(fam.persona_pattern, values[c]));
    }
    const std::size_t probe = rng.next_index(spec.attribute_count);
    const AttributeFamily& fam = families()[probe];
    // The response surface form follows the query paraphrase, so the form is
    // a learnable function of the context rather than hidden noise.
    const std::size_t form = rng.next_index(fam.queries.size());
    ex.query = fam.queries[form];
    ex.response = fill(fam.response_patterns[form % fam.response_patterns.size()], values[probe]);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<NliExample> make_nli(const SyntheticSpec& spec, std::size_t count, Rng& rng) {
  // Quota per label from the mix, remainder to the largest fraction.
  std::size_t n_entail = static_cast<std::size_t>(std::floor(spec.entailment_fraction * count));
  std::size_t n_neutral = static_cast<std::size_t>(std::floor(spec.neutral_fraction * count));
  std::size_t n_contra = static_cast<std::size_t>(std::floor(spec.contradiction_fraction * count));
  while (n_entail + n_neutral + n_contra < count) {
    if (spec.entailment_fraction >= spec.neutral_fraction &&
        spec.entailment_fraction >= spec.contradiction_fraction) {
      ++n_entail;
    } else if (spec.neutral_fraction >= spec.contradiction_fraction) {
      ++n_neutral;
    } else {
      ++n_contra;
    }
  }
  std::vector<NliLabel> labels;
  labels.insert(labels.end(), n_entail, NliLabel::entailment);
  labels.insert(labels.end(), n_neutral, NliLabel::neutral);
  labels.insert(labels.end(), n_contra, NliLabel::contradiction);
  // Fisher-Yates with the corpus stream.
  for (std::size_t i = labels.size(); i > 1; --i) {
    std::swap(labels[i - 1], labels[rng.next_index(i)]);
  }

  // Premises mirror the pipeline's input: a persona of 1..attribute_count
  // sentences joined by " . ", with the labeled relation holding against one
  // target sentence and the rest acting as distractors.
  std::vector<NliExample> out;
  out.reserve(count);
  for (NliLabel label : labels) {
    NliExample ex;
    ex.label = label;
    std::size_t k = 1 + rng.next_index(spec.attribute_count);
    if (label == NliLabel::neutral && k == spec.attribute_count) k = spec.attribute_count - 1;
    std::vector<std::size_t> chosen;
    while (chosen.size() < k) {
      const std::size_t fam = rng.next_index(spec.attribute_count);
      if (std::find(chosen.begin(), chosen.end(), fam) == chosen.end()) chosen.push_back(fam);
    }
    std::sort(chosen.begin(), chosen.end());
    std::vector<std::string> values(k);
    for (std::size_t c = 0; c < k; ++c) {
      const AttributeFamily& fam = families()[chosen[c]];
      values[c] = fam.values[rng.next_index(spec.values_per_attribute)];
      if (c) ex.premise += " . ";
      ex.premise += fill(fam.persona_pattern, values[c]);
    }
    switch (label) {
      case NliLabel::entailment: {
        const std::size_t target = rng.next_index(k);
        const AttributeFamily& fam = families()[chosen[target]];
        const char* pattern = fam.response_patterns[rng.next_index(fam.response_patterns.size())];
        ex.hypothesis = fill(pattern, values[target]);
        break;
      }
      case NliLabel::contradiction: {
        const std::size_t target = rng.next_index(k);
        const AttributeFamily& fam = families()[chosen[target]];
        const std::size_t value_idx = rng.next_index(spec.values_per_attribute - 1);
        std::string other_value = fam.values[value_idx];
        if (other_value == values[target]) other_value = fam.values[spec.values_per_attribute - 1];
        const char* pattern = fam.response_patterns[rng.next_index(fam.response_patterns.size())];
        ex.hypothesis = fill(pattern, other_value);
        break;
      }
      case NliLabel::neutral: {
        std::size_t other_fam = rng.next_index(spec.attribute_count - k);
        for (std::size_t c = 0; c < k; ++c) {
          if (chosen[c] <= other_fam) ++other_fam;
        }
        const AttributeFamily& other = families()[other_fam];
        const char* pattern =
            other.response_patterns[rng.next_index(other.response_patterns.size())];
        ex.hypothesis = fill(pattern, other.values[rng.next_index(spec.values_per_attribute)]);
        break;
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

SyntheticCorpus make_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng master(spec.seed);
  SyntheticCorpus corpus;
  Rng dialogue_rng = master.fork(1);
  corpus.train = make_dialogues(spec, spec.train_dialogues, dialogue_rng);
  corpus.valid = make_dialogues(spec, spec.valid_dialogues, dialogue_rng);
  corpus.test = make_dialogues(spec, spec.test_dialogues, dialogue_rng);
  Rng nli_rng = master.fork(2);
  corpus.nli_train = make_nli(spec, spec.train_nli, nli_rng);
  corpus.nli_valid = make_nli(spec, spec.valid_nli, nli_rng);
  corpus.nli_test = make_nli(spec, spec.test_nli, nli_rng);
  return corpus;
}

std::vector<std::string> premise_sentences(const std::string& premise) {
  return split_sentences(premise);
}

std::optional<std::pair<std::string, std::string>> parse_template(const std::string& sentence) {
  for (const AttributeFamily& fam : families()) {
    if (auto value = match_pattern(fam.persona_pattern, sentence)) {
      return std::make_pair(std::string(fam.name), *value);
    }
    for (const char* pattern : fam.response_patterns) {
      if (auto value = match_pattern(pattern, sentence)) {
        return std::make_pair(std::string(fam.name), *value);
      }
    }
  }
  return std::nullopt;
}

NliLabel oracle_label(const std::string& premise, const std::string& hypothesis) {
  const auto h = parse_template(hypothesis);
  if (!h) return NliLabel::neutral;
  bool conflicted = false;
  for (const std::string& sentence : premise_sentences(premise)) {
    const auto p = parse_template(sentence);
    if (!p || p->first != h->first) continue;
    if (p->second == h->second) return NliLabel::entailment;
    conflicted = true;
  }
  return conflicted ? NliLabel::contradiction : NliLabel::neutral;
}

bool oracle_entailed(const std::vector<std::string>& persona, const std::string& response) {
  const auto r = parse_template(response);
  if (!r) return false;
  for (const std::string& sentence : persona) {
    const auto p = parse_template(sentence);
    if (p && p->first == r->first && p->second == r->second) return true;
  }
  return false;
}

std::vector<std::string> corpus_texts(const SyntheticCorpus& corpus) {
  std::vector<std::string> texts;
  auto add_dialogues = [&texts](const std::vector<DialogueExample>& split) {
    for (const DialogueExample& ex : split) {
      for (const std::string& p : ex.persona) texts.push_back(p);
      texts.push_back(ex.query);
      texts.push_back(ex.response);
    }
  };
  auto add_nli = [&texts](const std::vector<NliExample>& split) {
    for (const NliExample& ex : split) {
      texts.push_back(ex.premise);
      texts.push_back(ex.hypothesis);
    }
  };
  add_dialogues(corpus.train);
  add_dialogues(corpus.valid);
  add_dialogues(corpus.test);
  add_nli(corpus.nli_train);
  add_nli(corpus.nli_valid);
  add_nli(corpus.nli_test);
  return texts;
}

}  // namespace gdr
