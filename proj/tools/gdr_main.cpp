// Command-line front end: synthetic corpus generation, matcher training,
// generator/rewriter training with variant selection, batch inference traces,
// and automatic metrics.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gdr/error.hpp"
#include "gdr/eval.hpp"
#include "gdr/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "v0.1.0";

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw gdr::DataError("cannot open '" + path + "' for writing");
  os << text;
  if (!os) throw gdr::DataError("write to '" + path + "' failed");
}

struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  ordered_json config;
  std::string started_at;
  std::vector<std::string> outputs;

  void write(const std::string& path, const std::string& finished_at = "") const {
    ordered_json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["seed"] = seed;
    j["config"] = config;
    j["started_at"] = started_at;
    if (!finished_at.empty()) j["finished_at"] = finished_at;
    j["outputs"] = outputs;
    write_text(path, j.dump(2) + "\n");
  }
};

void write_step_log(const std::vector<gdr::StepLog>& steps, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw gdr::DataError("cannot open '" + path + "' for writing");
  for (const gdr::StepLog& s : steps) {
    ordered_json j;
    j["step"] = s.step;
    j["phase"] = s.phase;
    j["loss_g"] = s.loss_g;
    j["loss_r"] = s.loss_r;
    j["lr"] = s.lr;
    os << j.dump() << '\n';
  }
  if (!os) throw gdr::DataError("write to '" + path + "' failed");
}

// Flat key=value configuration: every key names a long flag without its
// leading dashes. Values from the file apply only when the flag was not given
// on the command line, so flags always override the file.
using ConfigSetters = std::map<std::string, std::function<void(const std::string&)>>;

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' needs an integer, got '" + value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' needs a number, got '" + value + "'");
  }
}

void apply_flat_config(const CLI::App* cmd, const std::string& path,
                       const ConfigSetters& setters) {
  if (path.empty()) return;
  std::ifstream is(path);
  if (!is) throw gdr::DataError("config: cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not key=value");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    if (cmd->count("--" + key) > 0) continue;  // the explicit flag wins
    it->second(value);
  }
}

// Flags shared by the training commands.
struct TrainFlags {
  gdr::TrainingConfig cfg;
  std::string out_dir;
  std::string vocab_path;
  std::string config_path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Flat key=value config file; flags override it");
    cmd->add_option("--seed", cfg.seed, "Run seed");
    cmd->add_option("--out-dir", out_dir, "Output directory")->required();
    cmd->add_option("--vocab", vocab_path, "Vocabulary file")->required();
    cmd->add_option("--steps", cfg.max_steps, "Optimizer steps");
    cmd->add_option("--token-batch", cfg.token_batch_size, "Token budget per batch");
    cmd->add_option("--warmup-steps", cfg.warmup_steps, "Random-deletion warm-up steps");
    cmd->add_option("--lr-warmup-steps", cfg.lr_warmup_steps, "Schedule warm-up steps");
    cmd->add_option("--lr-scale", cfg.lr_scale, "Multiplier on the schedule");
    cmd->add_option("--hidden", cfg.model.hidden, "Hidden size");
    cmd->add_option("--heads", cfg.model.heads, "Attention heads");
    cmd->add_option("--ffn-inner", cfg.model.ffn_inner, "Feed-forward inner size");
    cmd->add_option("--layers-g", cfg.model.layers_g, "Generator layers");
    cmd->add_option("--layers-d", cfg.model.layers_d, "Matcher layers");
    cmd->add_option("--layers-r", cfg.model.layers_r, "Rewriter layers");
    cmd->add_option("--delete-fraction", cfg.delete_fraction, "Matcher deletion fraction");
    cmd->add_option("--warmup-delete-prob", cfg.warmup_delete_prob,
                    "Random deletion probability");
    cmd->add_option("--train-decode-max-len", cfg.train_decode_max_len,
                    "Prototype length cap during training");
    cmd->add_option("--decode-max-len", cfg.decode_max_len, "Decode length cap at inference");
  }

  ConfigSetters setters() {
    ConfigSetters setters;
    auto u64 = [](std::size_t& field) {
      return [&field](const std::string& v) { field = to_u64("", v); };
    };
    setters["seed"] = [this](const std::string& v) { cfg.seed = to_u64("seed", v); };
    setters["steps"] = u64(cfg.max_steps);
    setters["token-batch"] = u64(cfg.token_batch_size);
    setters["warmup-steps"] = u64(cfg.warmup_steps);
    setters["lr-warmup-steps"] = u64(cfg.lr_warmup_steps);
    setters["hidden"] = u64(cfg.model.hidden);
    setters["heads"] = u64(cfg.model.heads);
    setters["ffn-inner"] = u64(cfg.model.ffn_inner);
    setters["layers-g"] = u64(cfg.model.layers_g);
    setters["layers-d"] = u64(cfg.model.layers_d);
    setters["layers-r"] = u64(cfg.model.layers_r);
    setters["train-decode-max-len"] = u64(cfg.train_decode_max_len);
    setters["decode-max-len"] = u64(cfg.decode_max_len);
    setters["lr-scale"] = [this](const std::string& v) { cfg.lr_scale = to_double("lr-scale", v); };
    setters["delete-fraction"] = [this](const std::string& v) {
      cfg.delete_fraction = to_double("delete-fraction", v);
    };
    setters["warmup-delete-prob"] = [this](const std::string& v) {
      cfg.warmup_delete_prob = to_double("warmup-delete-prob", v);
    };
    setters["out-dir"] = [this](const std::string& v) { out_dir = v; };
    setters["vocab"] = [this](const std::string& v) { vocab_path = v; };
    return setters;
  }

  ordered_json snapshot() const {
    ordered_json j;
    j["seed"] = cfg.seed;
    j["steps"] = cfg.max_steps;
    j["token_batch"] = cfg.token_batch_size;
    j["warmup_steps"] = cfg.warmup_steps;
    j["lr_warmup_steps"] = cfg.lr_warmup_steps;
    j["lr_scale"] = cfg.lr_scale;
    j["hidden"] = cfg.model.hidden;
    j["heads"] = cfg.model.heads;
    j["ffn_inner"] = cfg.model.ffn_inner;
    j["layers_g"] = cfg.model.layers_g;
    j["layers_d"] = cfg.model.layers_d;
    j["layers_r"] = cfg.model.layers_r;
    j["delete_fraction"] = cfg.delete_fraction;
    j["warmup_delete_prob"] = cfg.warmup_delete_prob;
    j["train_decode_max_len"] = cfg.train_decode_max_len;
    j["decode_max_len"] = cfg.decode_max_len;
    j["vocab"] = vocab_path;
    j["out_dir"] = out_dir;
    return j;
  }
};

ordered_json trace_json(const gdr::PipelineTrace& trace, const gdr::Vocab& vocab,
                        const std::string& query) {
  ordered_json j;
  j["query"] = query;
  j["prototype"] = vocab.decode(trace.prototype.ids);
  if (trace.verdict) {
    ordered_json v;
    v["label"] = gdr::nli_label_name(trace.verdict->label);
    v["probs"] = trace.verdict->probs;
    v["response_weights"] = trace.verdict->response_weights;
    v["persona_weights"] = trace.verdict->persona_weights;
    j["verdict"] = v;
  }
  if (trace.masked) {
    std::string masked_text;
    for (std::size_t i = 0; i < trace.masked->ids.size(); ++i) {
      const int id = trace.masked->ids[i];
      if (id == gdr::kEosId || id == gdr::kPadId || id == gdr::kBosId) continue;
      if (!masked_text.empty()) masked_text.push_back(' ');
      masked_text += vocab.token(id);
    }
    j["masked"] = masked_text;
    j["masked_positions"] = trace.masked->masked_positions;
  }
  j["final"] = vocab.decode(trace.final_ids);
  return j;
}

int run_synth(const gdr::SyntheticSpec& spec, const std::string& out_dir) {
  fs::create_directories(out_dir);
  Manifest manifest;
  manifest.command = "synth";
  manifest.seed = spec.seed;
  manifest.config = {{"seed", spec.seed},
                     {"attributes", spec.attribute_count},
                     {"values", spec.values_per_attribute},
                     {"train_dialogues", spec.train_dialogues},
                     {"valid_dialogues", spec.valid_dialogues},
                     {"test_dialogues", spec.test_dialogues},
                     {"train_nli", spec.train_nli},
                     {"valid_nli", spec.valid_nli},
                     {"test_nli", spec.test_nli},
                     {"entailment_fraction", spec.entailment_fraction},
                     {"neutral_fraction", spec.neutral_fraction},
                     {"contradiction_fraction", spec.contradiction_fraction},
                     {"out_dir", out_dir}};
  manifest.started_at = timestamp_now();

  const gdr::SyntheticCorpus corpus = gdr::make_synthetic(spec);
  const gdr::Vocab vocab = gdr::build_vocab(gdr::corpus_texts(corpus));

  const std::string dialogues = out_dir + "/dialogues.jsonl";
  const std::string nli = out_dir + "/nli.jsonl";
  const std::string vocab_path = out_dir + "/vocab.txt";
  gdr::save_dialogues(corpus.train, dialogues);
  gdr::save_nli(corpus.nli_train, nli);
  vocab.save(vocab_path);
  gdr::save_dialogues(corpus.valid, out_dir + "/dialogues.valid.jsonl");
  gdr::save_dialogues(corpus.test, out_dir + "/dialogues.test.jsonl");
  gdr::save_nli(corpus.nli_valid, out_dir + "/nli.valid.jsonl");
  gdr::save_nli(corpus.nli_test, out_dir + "/nli.test.jsonl");

  manifest.outputs = {dialogues, nli, vocab_path,
                      out_dir + "/dialogues.valid.jsonl", out_dir + "/dialogues.test.jsonl",
                      out_dir + "/nli.valid.jsonl", out_dir + "/nli.test.jsonl"};
  manifest.write(out_dir + "/manifest.json", timestamp_now());

  std::cout << "dialogues: " << corpus.train.size() << " train, " << corpus.valid.size()
            << " valid, " << corpus.test.size() << " test\n";
  std::cout << "nli: " << corpus.nli_train.size() << " train, " << corpus.nli_valid.size()
            << " valid, " << corpus.nli_test.size() << " test\n";
  std::cout << "vocab: " << vocab.size() << " tokens\n";
  return 0;
}

int run_train_matcher(TrainFlags& flags, const std::string& train_path,
                      const std::string& heldout_path) {
  fs::create_directories(flags.out_dir);
  Manifest manifest;
  manifest.command = "train-matcher";
  manifest.seed = flags.cfg.seed;
  manifest.config = flags.snapshot();
  manifest.config["train"] = train_path;
  manifest.config["heldout"] = heldout_path;
  manifest.started_at = timestamp_now();
  const std::string checkpoint = flags.out_dir + "/matcher.gdr";
  const std::string log_path = flags.out_dir + "/steps.jsonl";
  manifest.outputs = {checkpoint, log_path};
  manifest.write(flags.out_dir + "/manifest.json");

  const gdr::Vocab vocab = gdr::Vocab::load(flags.vocab_path);
  const auto train = gdr::load_nli(train_path);
  const auto heldout = heldout_path.empty() ? std::vector<gdr::NliExample>{}
                                            : gdr::load_nli(heldout_path);

  gdr::ParameterStore store;
  const gdr::MatcherTrainResult result =
      gdr::train_matcher(train, heldout, vocab, flags.cfg, store);
  store.save(checkpoint);
  write_step_log(result.steps, log_path);
  manifest.write(flags.out_dir + "/manifest.json", timestamp_now());

  std::cout << "steps: " << result.steps.size() << "\n";
  for (std::size_t i = 0; i < result.epoch_accuracy.size(); ++i) {
    std::cout << "epoch " << (i + 1) << " held-out accuracy: " << result.epoch_accuracy[i]
              << "\n";
  }
  std::cout << "final held-out accuracy: " << result.final_accuracy << "\n";
  std::cout << "checkpoint: " << checkpoint << "\n";
  return 0;
}

int run_train_gdr(TrainFlags& flags, const std::string& train_path,
                  const std::string& matcher_path, const std::string& variant_str) {
  const auto variant = gdr::parse_variant(variant_str);
  if (!variant) throw CLI::ValidationError("--variant", "unknown variant '" + variant_str + "'");
  flags.cfg.variant = *variant;

  fs::create_directories(flags.out_dir);
  Manifest manifest;
  manifest.command = "train-gdr";
  manifest.seed = flags.cfg.seed;
  manifest.config = flags.snapshot();
  manifest.config["train"] = train_path;
  manifest.config["variant"] = variant_str;
  manifest.config["matcher"] = matcher_path;
  manifest.started_at = timestamp_now();
  const std::string checkpoint = flags.out_dir + "/model.gdr";
  const std::string log_path = flags.out_dir + "/steps.jsonl";
  manifest.outputs = {checkpoint, log_path};
  manifest.write(flags.out_dir + "/manifest.json");

  const gdr::Vocab vocab = gdr::Vocab::load(flags.vocab_path);
  const auto train = gdr::load_dialogues(train_path);
  std::optional<gdr::ParameterStore> matcher_store;
  if (!matcher_path.empty()) matcher_store = gdr::ParameterStore::load(matcher_path);

  gdr::ParameterStore store;
  const gdr::GdrTrainResult result = gdr::train_gdr(
      train, matcher_store ? &*matcher_store : nullptr, vocab, flags.cfg, store);
  store.save(checkpoint);
  write_step_log(result.steps, log_path);
  manifest.write(flags.out_dir + "/manifest.json", timestamp_now());

  std::cout << "steps: " << result.steps.size() << "\n";
  if (!result.steps.empty()) {
    const gdr::StepLog& last = result.steps.back();
    std::cout << "final loss_g: " << last.loss_g << " loss_r: " << last.loss_r << "\n";
  }
  std::cout << "checkpoint: " << checkpoint << "\n";
  return 0;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw gdr::DataError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

int run_respond(const std::string& checkpoint_path, const std::string& matcher_path,
                const std::string& vocab_path, const std::string& persona_path,
                const std::string& query_arg, const std::string& variant_str) {
  const gdr::Vocab vocab = gdr::Vocab::load(vocab_path);
  const gdr::ParameterStore store = gdr::ParameterStore::load(checkpoint_path);
  gdr::ModelBundle bundle = gdr::bind_bundle(store, vocab);
  if (!matcher_path.empty()) {
    const gdr::ParameterStore matcher_store = gdr::ParameterStore::load(matcher_path);
    bundle.matcher = gdr::bind_matcher(matcher_store, vocab);
  }
  gdr::Variant variant = bundle.variant;
  if (!variant_str.empty()) {
    const auto parsed = gdr::parse_variant(variant_str);
    if (!parsed) throw CLI::ValidationError("--variant", "unknown variant '" + variant_str + "'");
    variant = *parsed;
  }

  const std::vector<std::string> persona = read_lines(persona_path);
  std::vector<std::string> queries;
  if (fs::exists(query_arg) && fs::is_regular_file(query_arg)) {
    queries = read_lines(query_arg);
  } else {
    queries.push_back(query_arg);
  }

  for (const std::string& query : queries) {
    const gdr::PipelineTrace trace = gdr::respond(persona, query, vocab, bundle, variant);
    std::cout << trace_json(trace, vocab, query).dump() << "\n";
  }
  return 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& matcher_path,
             const std::string& vocab_path, const std::string& data_path,
             const std::string& variant_str, const std::string& report_path,
             const std::string& dump_path) {
  const gdr::Vocab vocab = gdr::Vocab::load(vocab_path);
  const gdr::ParameterStore store = gdr::ParameterStore::load(checkpoint_path);
  gdr::ModelBundle bundle = gdr::bind_bundle(store, vocab);

  const gdr::ParameterStore matcher_store = gdr::ParameterStore::load(matcher_path);
  const gdr::MatcherParams judge = gdr::bind_matcher(matcher_store, vocab);
  if (!bundle.matcher) bundle.matcher = judge;

  gdr::Variant variant = bundle.variant;
  if (!variant_str.empty()) {
    const auto parsed = gdr::parse_variant(variant_str);
    if (!parsed) throw CLI::ValidationError("--variant", "unknown variant '" + variant_str + "'");
    variant = *parsed;
  }

  const auto dialogues = gdr::load_dialogues(data_path);
  if (dialogues.empty()) throw gdr::DataError("eval: dataset '" + data_path + "' is empty");
  std::vector<gdr::TokenizedDialogue> dataset;
  dataset.reserve(dialogues.size());
  for (const auto& ex : dialogues) {
    dataset.push_back(gdr::tokenize_dialogue(ex, vocab, bundle.config));
  }

  const gdr::EvalOutput out = gdr::evaluate(bundle, judge, dataset, variant);

  ordered_json report;
  report["ppl"] = out.report.ppl;
  report["dist1"] = out.report.dist1;
  report["dist2"] = out.report.dist2;
  report["entailment_ratio"] = out.report.entailment_ratio;
  report["examples"] = out.report.examples;
  report["tokens"] = out.report.tokens;
  const std::string report_text = report.dump(2) + "\n";
  std::cout << report_text;
  if (!report_path.empty()) write_text(report_path, report_text);

  if (!dump_path.empty()) {
    std::ofstream os(dump_path, std::ios::trunc);
    if (!os) throw gdr::DataError("cannot open '" + dump_path + "' for writing");
    for (std::size_t i = 0; i < out.traces.size(); ++i) {
      os << trace_json(out.traces[i], vocab, dialogues[i].query).dump() << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-stage persona-consistent dialogue pipeline"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the synthetic corpus");
  gdr::SyntheticSpec spec;
  std::string synth_out;
  std::string synth_config;
  synth->add_option("--config", synth_config, "Flat key=value config file; flags override it");
  synth->add_option("--seed", spec.seed, "Corpus seed");
  synth->add_option("--out-dir", synth_out, "Output directory")->required();
  synth->add_option("--attributes", spec.attribute_count, "Attribute families (1-3)");
  synth->add_option("--values", spec.values_per_attribute, "Values per attribute");
  synth->add_option("--train-dialogues", spec.train_dialogues, "Training dialogues");
  synth->add_option("--valid-dialogues", spec.valid_dialogues, "Validation dialogues");
  synth->add_option("--test-dialogues", spec.test_dialogues, "Test dialogues");
  synth->add_option("--train-nli", spec.train_nli, "Training NLI triples");
  synth->add_option("--valid-nli", spec.valid_nli, "Validation NLI triples");
  synth->add_option("--test-nli", spec.test_nli, "Test NLI triples");
  synth->add_option("--entailment-frac", spec.entailment_fraction, "Entailment fraction");
  synth->add_option("--neutral-frac", spec.neutral_fraction, "Neutral fraction");
  synth->add_option("--contradiction-frac", spec.contradiction_fraction,
                    "Contradiction fraction");

  // train-matcher
  auto* train_matcher_cmd = app.add_subcommand("train-matcher", "Train the consistency matcher");
  TrainFlags matcher_flags;
  matcher_flags.cfg.max_steps = 6000;
  matcher_flags.cfg.model.hidden = 48;
  matcher_flags.cfg.model.ffn_inner = 96;
  std::string matcher_train_path, matcher_heldout_path;
  matcher_flags.attach(train_matcher_cmd);
  train_matcher_cmd->add_option("--train", matcher_train_path, "Training NLI JSONL")->required();
  train_matcher_cmd->add_option("--heldout", matcher_heldout_path, "Held-out NLI JSONL");

  // train-gdr
  auto* train_gdr_cmd = app.add_subcommand("train-gdr", "Train generator (and rewriter)");
  TrainFlags gdr_flags;
  std::string gdr_train_path, gdr_matcher_path;
  std::string gdr_variant = "gdr";
  gdr_flags.attach(train_gdr_cmd);
  train_gdr_cmd->add_option("--train", gdr_train_path, "Training dialogue JSONL")->required();
  train_gdr_cmd->add_option("--matcher", gdr_matcher_path, "Trained matcher checkpoint");
  train_gdr_cmd->add_option("--variant", gdr_variant, "Pipeline variant: g|gr|grdr|gdr");

  // respond
  auto* respond_cmd = app.add_subcommand("respond", "Run inference traces");
  std::string r_checkpoint, r_matcher, r_vocab, r_persona, r_query, r_variant, r_config;
  respond_cmd->add_option("--config", r_config, "Flat key=value config file; flags override it");
  respond_cmd->add_option("--checkpoint", r_checkpoint, "Model checkpoint")->required();
  respond_cmd->add_option("--matcher", r_matcher, "Matcher checkpoint (gdr variant)");
  respond_cmd->add_option("--vocab", r_vocab, "Vocabulary file")->required();
  respond_cmd->add_option("--persona", r_persona, "Persona file, one sentence per line")
      ->required();
  respond_cmd->add_option("--query", r_query, "Query string, or a file of queries")->required();
  respond_cmd->add_option("--variant", r_variant, "Override the checkpoint variant");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Automatic metrics over a dataset");
  std::string e_checkpoint, e_matcher, e_vocab, e_data, e_variant, e_report, e_dump, e_config;
  eval_cmd->add_option("--config", e_config, "Flat key=value config file; flags override it");
  eval_cmd->add_option("--checkpoint", e_checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--matcher", e_matcher, "Judge matcher checkpoint")->required();
  eval_cmd->add_option("--vocab", e_vocab, "Vocabulary file")->required();
  eval_cmd->add_option("--data", e_data, "Dialogue JSONL to evaluate")->required();
  eval_cmd->add_option("--variant", e_variant, "Override the checkpoint variant");
  eval_cmd->add_option("--out", e_report, "Also write the report JSON here");
  eval_cmd->add_option("--dump", e_dump, "Write per-example traces JSONL here");

  try {
    app.parse(argc, argv);

    if (synth->parsed()) {
      ConfigSetters setters;
      auto u64 = [](std::size_t& field) {
        return [&field](const std::string& v) { field = to_u64("", v); };
      };
      setters["seed"] = [&spec](const std::string& v) { spec.seed = to_u64("seed", v); };
      setters["attributes"] = u64(spec.attribute_count);
      setters["values"] = u64(spec.values_per_attribute);
      setters["train-dialogues"] = u64(spec.train_dialogues);
      setters["valid-dialogues"] = u64(spec.valid_dialogues);
      setters["test-dialogues"] = u64(spec.test_dialogues);
      setters["train-nli"] = u64(spec.train_nli);
      setters["valid-nli"] = u64(spec.valid_nli);
      setters["test-nli"] = u64(spec.test_nli);
      setters["entailment-frac"] = [&spec](const std::string& v) {
        spec.entailment_fraction = to_double("entailment-frac", v);
      };
      setters["neutral-frac"] = [&spec](const std::string& v) {
        spec.neutral_fraction = to_double("neutral-frac", v);
      };
      setters["contradiction-frac"] = [&spec](const std::string& v) {
        spec.contradiction_fraction = to_double("contradiction-frac", v);
      };
      setters["out-dir"] = [&synth_out](const std::string& v) { synth_out = v; };
      apply_flat_config(synth, synth_config, setters);
      return run_synth(spec, synth_out);
    }
    if (train_matcher_cmd->parsed()) {
      ConfigSetters setters = matcher_flags.setters();
      setters["train"] = [&](const std::string& v) { matcher_train_path = v; };
      setters["heldout"] = [&](const std::string& v) { matcher_heldout_path = v; };
      apply_flat_config(train_matcher_cmd, matcher_flags.config_path, setters);
      return run_train_matcher(matcher_flags, matcher_train_path, matcher_heldout_path);
    }
    if (train_gdr_cmd->parsed()) {
      ConfigSetters setters = gdr_flags.setters();
      setters["train"] = [&](const std::string& v) { gdr_train_path = v; };
      setters["matcher"] = [&](const std::string& v) { gdr_matcher_path = v; };
      setters["variant"] = [&](const std::string& v) { gdr_variant = v; };
      apply_flat_config(train_gdr_cmd, gdr_flags.config_path, setters);
      if (gdr_variant == "gdr" && gdr_matcher_path.empty()) {
        std::cerr << "train-gdr: --variant gdr requires --matcher\n";
        return kExitUsage;
      }
      return run_train_gdr(gdr_flags, gdr_train_path, gdr_matcher_path, gdr_variant);
    }
    if (respond_cmd->parsed()) {
      ConfigSetters setters;
      auto str = [](std::string& field) {
        return [&field](const std::string& v) { field = v; };
      };
      setters["checkpoint"] = str(r_checkpoint);
      setters["matcher"] = str(r_matcher);
      setters["vocab"] = str(r_vocab);
      setters["persona"] = str(r_persona);
      setters["query"] = str(r_query);
      setters["variant"] = str(r_variant);
      apply_flat_config(respond_cmd, r_config, setters);
      return run_respond(r_checkpoint, r_matcher, r_vocab, r_persona, r_query, r_variant);
    }
    if (eval_cmd->parsed()) {
      ConfigSetters setters;
      auto str = [](std::string& field) {
        return [&field](const std::string& v) { field = v; };
      };
      setters["checkpoint"] = str(e_checkpoint);
      setters["matcher"] = str(e_matcher);
      setters["vocab"] = str(e_vocab);
      setters["data"] = str(e_data);
      setters["variant"] = str(e_variant);
      setters["out"] = str(e_report);
      setters["dump"] = str(e_dump);
      apply_flat_config(eval_cmd, e_config, setters);
      return run_eval(e_checkpoint, e_matcher, e_vocab, e_data, e_variant, e_report, e_dump);
    }
    std::cerr << "no subcommand\n";
    return kExitUsage;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const gdr::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const gdr::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
