// phoneseq: extract discriminative phone sequences from language-labeled
// transcriptions and classify speakers' native language with them.
//
// Subcommands: extract, classify, evaluate, generate. Exit codes:
//   0 success, 1 usage or configuration error, 2 data error,
//   3 partial success (some speaker abstained).

#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phoneseq/phoneseq.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitPartial = 3;

phoneseq::LabeledCorpus read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw phoneseq::data_error("cannot open corpus file: " + path);
  return phoneseq::parse_corpus(in);
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw phoneseq::data_error("cannot open output file: " + path);
  out << contents;
  if (!out) throw phoneseq::data_error("failed writing: " + path);
}

// Flat key-value configuration file: `key = value` per line, '#' comments.
// Keys mirror the long option names without the leading dashes. Values
// from the file apply only where the command line did not set the option.
std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw phoneseq::config_error("cannot open config file: " + path);
  std::map<std::string, std::string> entries;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string text) {
    auto first = text.find_first_not_of(" \t");
    auto last = text.find_last_not_of(" \t\r");
    if (first == std::string::npos) return std::string();
    return text.substr(first, last - first + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw phoneseq::config_error("config line " + std::to_string(line_no) +
                                   ": expected '<key> = <value>'");
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty())
      throw phoneseq::config_error("config line " + std::to_string(line_no) +
                                   ": expected '<key> = <value>'");
    entries[key] = value;
  }
  return entries;
}

class ConfigOverlay {
 public:
  ConfigOverlay(CLI::App* sub, const std::string& path) : sub_(sub) {
    if (!path.empty()) entries_ = load_config_file(path);
  }

  void apply(const std::string& key, double& target) {
    if (!fresh(key)) return;
    target = parse_number(key);
  }
  void apply(const std::string& key, int& target) {
    if (!fresh(key)) return;
    double value = parse_number(key);
    target = static_cast<int>(value);
    if (static_cast<double>(target) != value)
      throw phoneseq::config_error("config key '" + key + "': expected an integer");
  }
  void apply(const std::string& key, bool& target) {
    if (!fresh(key)) return;
    const std::string& value = entries_.at(key);
    if (value == "true" || value == "yes" || value == "on" || value == "1")
      target = true;
    else if (value == "false" || value == "no" || value == "off" || value == "0")
      target = false;
    else
      throw phoneseq::config_error("config key '" + key + "': expected a boolean, got '" + value +
                                   "'");
  }
  void apply(const std::string& key, std::string& target) {
    if (!fresh(key)) return;
    target = entries_.at(key);
  }

  // every config key must belong to this subcommand
  void finish() const {
    for (const auto& [key, value] : entries_)
      if (!known_.count(key))
        throw phoneseq::config_error("unknown config key '" + key + "'");
  }

 private:
  bool fresh(const std::string& key) {
    known_.insert(key);
    if (!entries_.count(key)) return false;
    return sub_->count("--" + key) == 0;
  }

  double parse_number(const std::string& key) {
    const std::string& value = entries_.at(key);
    try {
      std::size_t used = 0;
      double parsed = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return parsed;
    } catch (const std::exception&) {
      throw phoneseq::config_error("config key '" + key + "': expected a number, got '" + value +
                                   "'");
    }
  }

  CLI::App* sub_;
  std::map<std::string, std::string> entries_;
  std::set<std::string> known_;
};

struct ExtractionFlags {
  phoneseq::ExtractionConfig config;

  void apply_overlay(ConfigOverlay& overlay) {
    overlay.apply("alpha", config.alpha);
    overlay.apply("max-p", config.max_p);
    overlay.apply("min-count", config.min_count_per_speaker);
    overlay.apply("sentences-per-speaker", config.sentences_per_speaker);
    overlay.apply("max-sequences", config.max_sequences_per_language);
    overlay.apply("overlap", config.overlapping);
  }

  void attach(CLI::App* app) {
    app->add_option("--alpha", config.alpha,
                    "discriminant factor: required dominance over every other language")
        ->capture_default_str();
    app->add_option("--max-p", config.max_p, "maximum sequence length in phones")
        ->capture_default_str();
    app->add_option("--min-count", config.min_count_per_speaker,
                    "eligibility floor, occurrences per speaker")
        ->capture_default_str();
    app->add_option("--sentences-per-speaker", config.sentences_per_speaker,
                    "sentences per speaker used to scale --min-count")
        ->capture_default_str();
    app->add_option("--max-sequences", config.max_sequences_per_language,
                    "cap on retained sequences per language")
        ->capture_default_str();
    app->add_flag("--overlap,!--no-overlap", config.overlapping,
                  "count overlapping occurrences (default on)")
        ->capture_default_str();
  }
};

std::string format_classification_line(const phoneseq::ClassificationResult* result,
                                       const std::string& speaker_id,
                                       const std::vector<phoneseq::LanguageId>& languages) {
  std::ostringstream out;
  out << speaker_id << '\t' << (result ? result->decision : "ABSTAIN");
  out << "\tscores";
  if (result)
    for (const auto& [language, score] : result->scores)
      out << ' ' << language << '=' << phoneseq::detail::format_score(score);
  else
    out << " -";
  out << "\tcards";
  for (const auto& language : languages) {
    std::size_t card = 0;
    if (result) {
      auto it = result->observations.per_language.find(language);
      if (it != result->observations.per_language.end()) card = it->second.size();
    }
    out << ' ' << language << '=' << card;
  }
  out << "\tignored";
  if (result && !result->ignored.empty())
    for (const auto& language : result->ignored) out << ' ' << language;
  else
    out << " -";
  return out.str();
}

int run_extract(const std::string& corpus_path, const std::string& model_path,
                const ExtractionFlags& flags, double epsilon, const std::string& dump_prefix) {
  auto corpus = read_corpus(corpus_path);
  auto parts = phoneseq::partition_by_language(corpus);
  std::vector<phoneseq::CountTable> tables;
  for (const auto& language : corpus.languages)
    tables.push_back(phoneseq::build_count_table(language, parts.at(language), flags.config.max_p,
                                                 flags.config.overlapping));
  if (!dump_prefix.empty()) {
    for (const auto& table : tables) {
      std::ostringstream dump;
      phoneseq::dump_counts(table, dump);
      write_file(dump_prefix + table.language + ".counts", dump.str());
    }
  }
  auto sets = phoneseq::extract_sets(tables, flags.config);
  auto model = phoneseq::SequenceModel::build(tables, sets, epsilon);
  std::ostringstream out;
  model.save(out);
  write_file(model_path, out.str());
  for (const auto& set : model.sets())
    std::cerr << "extracted " << set.sequences.size() << " sequence(s) for " << set.language
              << '\n';
  return kExitOk;
}

int run_classify(const std::string& model_path, const std::string& input_path,
                 phoneseq::Mode mode, double beta, bool overlapping, bool local_use_prior) {
  std::ifstream model_in(model_path);
  if (!model_in) throw phoneseq::data_error("cannot open model file: " + model_path);
  auto model = phoneseq::SequenceModel::load(model_in);
  auto corpus = read_corpus(input_path);  // language column is ignored here

  bool any_abstained = false;
  for (const auto& speaker : corpus.speakers) {
    phoneseq::ClassificationResult result;
    bool abstained = false;
    try {
      auto obs = phoneseq::collect_observations(model, speaker.utterances, overlapping);
      result = mode == phoneseq::Mode::global
                   ? phoneseq::classify_global(model, std::move(obs))
                   : phoneseq::classify_local(model, std::move(obs), beta, local_use_prior);
    } catch (const phoneseq::data_error&) {
      abstained = true;
      any_abstained = true;
    }
    std::cout << format_classification_line(abstained ? nullptr : &result, speaker.speaker_id,
                                            model.languages())
              << '\n';
  }
  return any_abstained ? kExitPartial : kExitOk;
}

int run_evaluate(const std::string& corpus_path, const std::vector<phoneseq::Mode>& modes,
                 const ExtractionFlags& flags, double beta, double epsilon, bool local_use_prior,
                 bool no_loo, const std::string& report_path, const std::string& json_path) {
  auto corpus = read_corpus(corpus_path);
  std::string text;
  nlohmann::json json(nlohmann::json::value_t::object);
  bool any_abstained = false;
  for (auto mode : modes) {
    auto report = no_loo
                      ? phoneseq::evaluate_resub(corpus, flags.config, mode, beta, epsilon,
                                                 local_use_prior)
                      : phoneseq::evaluate_loo(corpus, flags.config, mode, beta, epsilon,
                                               local_use_prior);
    if (!text.empty()) text += '\n';
    text += phoneseq::render_report(report);
    json[std::string(phoneseq::to_string(mode))] = phoneseq::report_to_json(report);
    for (const auto& fold : report.folds) any_abstained = any_abstained || fold.abstained;
  }
  if (report_path.empty() || report_path == "-")
    std::cout << text;
  else
    write_file(report_path, text);
  if (!json_path.empty()) write_file(json_path, json.dump(2) + "\n");
  return any_abstained ? kExitPartial : kExitOk;
}

int run_generate(const std::string& spec_path, const std::string& output_path) {
  std::ifstream in(spec_path);
  if (!in) throw phoneseq::config_error("cannot open spec file: " + spec_path);
  auto spec = phoneseq::parse_synth_spec(in);
  auto corpus = phoneseq::generate(spec);
  std::ostringstream out;
  phoneseq::serialize_corpus(corpus, out);
  if (output_path.empty() || output_path == "-")
    std::cout << out.str();
  else
    write_file(output_path, out.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discriminative phone-sequence extraction and native-language classification"};
  app.require_subcommand(1);

  // extract
  auto* extract = app.add_subcommand("extract", "build a sequence model from a labeled corpus");
  std::string ex_corpus, ex_model, ex_dump;
  double ex_epsilon = 1e-6;
  ExtractionFlags ex_flags;
  extract->add_option("--corpus", ex_corpus, "transcription file")->required();
  extract->add_option("--model", ex_model, "model file to write")->required();
  ex_flags.attach(extract);
  extract->add_option("--epsilon", ex_epsilon, "additive smoothing stored in the model")
      ->capture_default_str();
  extract->add_option("--dump-counts", ex_dump,
                      "write per-language count tables to <prefix><language>.counts");
  std::string ex_config;
  extract->add_option("--config", ex_config, "flat key-value configuration file");

  // classify
  auto* classify = app.add_subcommand("classify", "classify each speaker in a transcription file");
  std::string cl_model, cl_input, cl_mode = "global";
  double cl_beta = 2.5;
  bool cl_overlap = true, cl_drop_prior = false;
  classify->add_option("--model", cl_model, "model file")->required();
  classify->add_option("--input", cl_input, "transcription file (language column ignored)")
      ->required();
  classify->add_option("--mode", cl_mode, "decision rule: global or local")
      ->check(CLI::IsMember({"global", "local"}))
      ->capture_default_str();
  classify->add_option("--beta", cl_beta, "local rule: evidence-ratio pruning factor")
      ->capture_default_str();
  classify->add_flag("--overlap,!--no-overlap", cl_overlap,
                     "match overlapping occurrences (must match extraction)")
      ->capture_default_str();
  classify->add_flag("--local-drop-prior", cl_drop_prior,
                     "local rule: drop the prior-correction term");
  std::string cl_config;
  classify->add_option("--config", cl_config, "flat key-value configuration file");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "leave-one-out evaluation with confusion matrix");
  std::string ev_corpus, ev_mode = "both", ev_report = "-", ev_json;
  double ev_beta = 2.5, ev_epsilon = 1e-6;
  bool ev_no_loo = false, ev_drop_prior = false;
  ExtractionFlags ev_flags;
  evaluate->add_option("--corpus", ev_corpus, "transcription file")->required();
  evaluate->add_option("--mode", ev_mode, "decision rule: global, local, or both")
      ->check(CLI::IsMember({"global", "local", "both"}))
      ->capture_default_str();
  ev_flags.attach(evaluate);
  evaluate->add_option("--beta", ev_beta, "local rule: evidence-ratio pruning factor")
      ->capture_default_str();
  evaluate->add_option("--epsilon", ev_epsilon, "additive smoothing")->capture_default_str();
  evaluate->add_flag("--no-loo", ev_no_loo, "train once on the full corpus instead of per-fold");
  evaluate->add_flag("--local-drop-prior", ev_drop_prior,
                     "local rule: drop the prior-correction term");
  evaluate->add_option("--report", ev_report, "text report file ('-' for stdout)")
      ->capture_default_str();
  evaluate->add_option("--json", ev_json, "machine-readable report file");
  std::string ev_config;
  evaluate->add_option("--config", ev_config, "flat key-value configuration file");

  // generate
  auto* generate = app.add_subcommand("generate", "produce a synthetic corpus from a spec file");
  std::string ge_spec, ge_output = "-";
  generate->add_option("--spec", ge_spec, "generation spec (key-value file)")->required();
  generate->add_option("--output", ge_output, "corpus file to write ('-' for stdout)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (extract->parsed()) {
      ConfigOverlay overlay(extract, ex_config);
      ex_flags.apply_overlay(overlay);
      overlay.apply("epsilon", ex_epsilon);
      overlay.finish();
      return run_extract(ex_corpus, ex_model, ex_flags, ex_epsilon, ex_dump);
    }
    if (classify->parsed()) {
      ConfigOverlay overlay(classify, cl_config);
      overlay.apply("mode", cl_mode);
      overlay.apply("beta", cl_beta);
      overlay.apply("overlap", cl_overlap);
      overlay.apply("local-drop-prior", cl_drop_prior);
      overlay.finish();
      return run_classify(cl_model, cl_input, phoneseq::mode_from_string(cl_mode), cl_beta,
                          cl_overlap, !cl_drop_prior);
    }
    if (evaluate->parsed()) {
      ConfigOverlay overlay(evaluate, ev_config);
      ev_flags.apply_overlay(overlay);
      overlay.apply("mode", ev_mode);
      overlay.apply("beta", ev_beta);
      overlay.apply("epsilon", ev_epsilon);
      overlay.apply("local-drop-prior", ev_drop_prior);
      overlay.finish();
      std::vector<phoneseq::Mode> modes;
      if (ev_mode == "both")
        modes = {phoneseq::Mode::global, phoneseq::Mode::local};
      else
        modes = {phoneseq::mode_from_string(ev_mode)};
      return run_evaluate(ev_corpus, modes, ev_flags, ev_beta, ev_epsilon, !ev_drop_prior,
                          ev_no_loo, ev_report, ev_json);
    }
    if (generate->parsed()) return run_generate(ge_spec, ge_output);
  } catch (const phoneseq::config_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const phoneseq::error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
