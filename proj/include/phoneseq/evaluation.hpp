#pragma once

#include <cstdio>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "phoneseq/base.hpp"
#include "phoneseq/classifier.hpp"
#include "phoneseq/corpus.hpp"
#include "phoneseq/counting.hpp"
#include "phoneseq/extraction.hpp"
#include "phoneseq/model.hpp"

namespace phoneseq {

// Outcome of classifying one held-out speaker, plus an audit trail of the
// speakers whose data built that fold's tables.
struct FoldRecord {
  std::string speaker_id;
  LanguageId true_language;
  LanguageId decision;  // empty when abstained
  bool abstained = false;
  std::map<LanguageId, double> scores;
  std::set<LanguageId> ignored;
  std::vector<std::string> train_speaker_ids;
};

// Speaker percentages; rows are the true language, columns the decided
// one. Abstentions (speakers with no usable evidence) are tracked in a
// separate column rather than folded into any language.
struct ConfusionMatrix {
  std::vector<LanguageId> languages;
  std::vector<std::vector<double>> cells;  // percent, row-major
  std::vector<double> abstain_pct;
  std::vector<std::size_t> totals;  // speakers per true language

  bool has_abstentions() const {
    for (double pct : abstain_pct)
      if (pct > 0.0) return true;
    return false;
  }
};

struct EvaluationReport {
  Mode mode = Mode::global;
  bool leave_one_out = true;
  double beta = 2.5;
  double epsilon = 1e-6;
  bool local_use_prior = true;
  ExtractionConfig config;
  ConfusionMatrix matrix;
  double classification_rate = 0.0;  // correct speakers / all speakers
  std::vector<FoldRecord> folds;
};

namespace detail {

// Trains on `train`, classifies `test`, and fills the record. Training or
// classification failures caused by the data (empty sets, no evidence)
// become an abstention; they are not silently assigned to a language.
inline void run_fold(const LabeledCorpus& train, const Speaker& test,
                     const ExtractionConfig& config, Mode mode, double beta, double epsilon,
                     bool local_use_prior, FoldRecord& record) {
  record.train_speaker_ids.reserve(train.speakers.size());
  for (const auto& speaker : train.speakers) record.train_speaker_ids.push_back(speaker.speaker_id);
  try {
    auto parts = partition_by_language(train);
    std::vector<CountTable> tables;
    tables.reserve(train.languages.size());
    for (const auto& language : train.languages)
      tables.push_back(build_count_table(language, parts.at(language), config.max_p,
                                         config.overlapping));
    auto sets = extract_sets(tables, config);
    auto model = SequenceModel::build(tables, sets, epsilon);
    auto obs = collect_observations(model, test.utterances, config.overlapping);
    auto result = mode == Mode::global
                      ? classify_global(model, std::move(obs))
                      : classify_local(model, std::move(obs), beta, local_use_prior);
    record.decision = result.decision;
    record.scores = std::move(result.scores);
    record.ignored = std::move(result.ignored);
  } catch (const data_error&) {
    record.abstained = true;
  }
}

inline EvaluationReport assemble_report(const LabeledCorpus& corpus, std::vector<FoldRecord> folds,
                                        const ExtractionConfig& config, Mode mode,
                                        bool leave_one_out, double beta, double epsilon,
                                        bool local_use_prior) {
  EvaluationReport report;
  report.mode = mode;
  report.leave_one_out = leave_one_out;
  report.beta = beta;
  report.epsilon = epsilon;
  report.local_use_prior = local_use_prior;
  report.config = config;

  const std::size_t n = corpus.languages.size();
  std::map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[corpus.languages[i]] = i;

  std::vector<std::vector<std::size_t>> counts(n, std::vector<std::size_t>(n, 0));
  std::vector<std::size_t> abstain(n, 0), totals(n, 0);
  std::size_t correct = 0;
  for (const auto& fold : folds) {
    std::size_t row = index.at(fold.true_language);
    ++totals[row];
    if (fold.abstained) {
      ++abstain[row];
    } else {
      ++counts[row][index.at(fold.decision)];
      if (fold.decision == fold.true_language) ++correct;
    }
  }

  report.matrix.languages = corpus.languages;
  report.matrix.totals = totals;
  report.matrix.cells.assign(n, std::vector<double>(n, 0.0));
  report.matrix.abstain_pct.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (totals[i] == 0) continue;
    for (std::size_t j = 0; j < n; ++j)
      report.matrix.cells[i][j] = 100.0 * static_cast<double>(counts[i][j]) / static_cast<double>(totals[i]);
    report.matrix.abstain_pct[i] = 100.0 * static_cast<double>(abstain[i]) / static_cast<double>(totals[i]);
  }
  report.classification_rate =
      folds.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(folds.size());
  report.folds = std::move(folds);
  return report;
}

}  // namespace detail

// Leave-one-out evaluation: one fold per speaker, retraining the whole
// extraction pipeline on everyone else. Only the held-out speaker's own
// language loses data in a fold; all other languages keep all speakers.
inline EvaluationReport evaluate_loo(const LabeledCorpus& corpus, const ExtractionConfig& config,
                                     Mode mode, double beta, double epsilon,
                                     bool local_use_prior = true) {
  config.validate();
  if (!(beta >= 1.0)) throw config_error("beta must be >= 1");
  std::map<std::string_view, std::size_t> speaker_counts;
  for (const auto& speaker : corpus.speakers) ++speaker_counts[speaker.language];
  for (const auto& language : corpus.languages)
    if (speaker_counts[language] < 2)
      throw data_error("language '" + language + "' has " +
                       std::to_string(speaker_counts[language]) +
                       " speaker(s); leave-one-out needs at least 2");

  std::vector<FoldRecord> folds;
  folds.reserve(corpus.speakers.size());
  for (const auto& speaker : corpus.speakers) {
    auto split = leave_one_out_split(corpus, speaker.speaker_id);
    FoldRecord record;
    record.speaker_id = speaker.speaker_id;
    record.true_language = speaker.language;
    detail::run_fold(split.train, split.test, config, mode, beta, epsilon, local_use_prior, record);
    folds.push_back(std::move(record));
  }
  return detail::assemble_report(corpus, std::move(folds), config, mode, true, beta, epsilon,
                                 local_use_prior);
}

// Resubstitution variant: train once on the full corpus and classify every
// speaker with that single model. Matches what `extract` followed by
// `classify` produces on the training corpus.
inline EvaluationReport evaluate_resub(const LabeledCorpus& corpus, const ExtractionConfig& config,
                                       Mode mode, double beta, double epsilon,
                                       bool local_use_prior = true) {
  config.validate();
  if (!(beta >= 1.0)) throw config_error("beta must be >= 1");
  std::vector<FoldRecord> folds;
  folds.reserve(corpus.speakers.size());
  for (const auto& speaker : corpus.speakers) {
    FoldRecord record;
    record.speaker_id = speaker.speaker_id;
    record.true_language = speaker.language;
    detail::run_fold(corpus, speaker, config, mode, beta, epsilon, local_use_prior, record);
    folds.push_back(std::move(record));
  }
  return detail::assemble_report(corpus, std::move(folds), config, mode, false, beta, epsilon,
                                 local_use_prior);
}

// Text table with languages as row and column headers, one decimal per
// cell, and the rate appended. The abstain column appears only when some
// speaker abstained.
inline std::string render_confusion(const ConfusionMatrix& matrix, double classification_rate) {
  const bool with_abstain = matrix.has_abstentions();
  const std::string corner = "true\\decided";
  std::size_t first_width = corner.size();
  for (const auto& language : matrix.languages) first_width = std::max(first_width, language.size());

  std::vector<std::size_t> widths;
  for (const auto& language : matrix.languages) widths.push_back(std::max<std::size_t>(7, language.size()));
  if (with_abstain) widths.push_back(7);

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(first_width)) << corner << std::right;
  for (std::size_t j = 0; j < matrix.languages.size(); ++j)
    out << "  " << std::setw(static_cast<int>(widths[j])) << matrix.languages[j];
  if (with_abstain) out << "  " << std::setw(7) << "abstain";
  out << '\n';

  out << std::fixed << std::setprecision(1);
  for (std::size_t i = 0; i < matrix.languages.size(); ++i) {
    out << std::left << std::setw(static_cast<int>(first_width)) << matrix.languages[i] << std::right;
    for (std::size_t j = 0; j < matrix.languages.size(); ++j)
      out << "  " << std::setw(static_cast<int>(widths[j])) << matrix.cells[i][j];
    if (with_abstain) out << "  " << std::setw(7) << matrix.abstain_pct[i];
    out << '\n';
  }
  char rate[64];
  std::snprintf(rate, sizeof(rate), "classification rate: %.2f%%", 100.0 * classification_rate);
  out << rate << '\n';
  return out.str();
}

struct ParsedConfusion {
  ConfusionMatrix matrix;
  double classification_rate = 0.0;
};

inline ParsedConfusion parse_confusion(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  ParsedConfusion parsed;
  bool header_seen = false;
  bool with_abstain = false;
  bool rate_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = detail::split_tokens(line);
    if (tokens.empty()) continue;
    if (!header_seen) {
      if (tokens[0] != "true\\decided")
        throw parse_error(line_no, "expected confusion header starting with 'true\\decided'");
      for (std::size_t j = 1; j < tokens.size(); ++j)
        parsed.matrix.languages.emplace_back(tokens[j]);
      if (!parsed.matrix.languages.empty() && parsed.matrix.languages.back() == "abstain") {
        parsed.matrix.languages.pop_back();
        with_abstain = true;
      }
      if (parsed.matrix.languages.empty()) throw parse_error(line_no, "no languages in header");
      header_seen = true;
      continue;
    }
    if (tokens[0] == "classification") {
      if (tokens.size() != 3 || tokens[1] != "rate:")
        throw parse_error(line_no, "malformed classification rate line");
      std::string value(tokens[2]);
      if (value.empty() || value.back() != '%')
        throw parse_error(line_no, "classification rate must end with '%'");
      value.pop_back();
      parsed.classification_rate = detail::parse_double(value, line_no, "rate") / 100.0;
      rate_seen = true;
      continue;
    }
    const std::size_t n = parsed.matrix.languages.size();
    std::size_t expected = 1 + n + (with_abstain ? 1 : 0);
    if (tokens.size() != expected) throw parse_error(line_no, "wrong number of columns in row");
    std::size_t row = parsed.matrix.cells.size();
    if (row >= n || tokens[0] != parsed.matrix.languages[row])
      throw parse_error(line_no, "unexpected row label '" + std::string(tokens[0]) + "'");
    std::vector<double> cells;
    for (std::size_t j = 0; j < n; ++j)
      cells.push_back(detail::parse_double(tokens[1 + j], line_no, "cell"));
    parsed.matrix.cells.push_back(std::move(cells));
    parsed.matrix.abstain_pct.push_back(
        with_abstain ? detail::parse_double(tokens[1 + n], line_no, "abstain cell") : 0.0);
  }
  if (!header_seen || parsed.matrix.cells.size() != parsed.matrix.languages.size() || !rate_seen)
    throw data_error("incomplete confusion table");
  parsed.matrix.totals.assign(parsed.matrix.languages.size(), 0);
  return parsed;
}

namespace detail {

inline std::string format_score(double value) {
  char buf[64];
  int n = std::snprintf(buf, sizeof(buf), "%.10g", value);
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace detail

// Full human-readable report: parameter line, one line per fold, then the
// confusion table and rate.
inline std::string render_report(const EvaluationReport& report) {
  std::ostringstream out;
  out << "# evaluation mode=" << to_string(report.mode)
      << " loo=" << (report.leave_one_out ? "yes" : "no") << " alpha=" << report.config.alpha
      << " max_p=" << report.config.max_p
      << " min_count_per_speaker=" << report.config.min_count_per_speaker
      << " sentences_per_speaker=" << report.config.sentences_per_speaker
      << " max_sequences_per_language=" << report.config.max_sequences_per_language
      << " overlap=" << (report.config.overlapping ? "yes" : "no") << " beta=" << report.beta
      << " epsilon=" << report.epsilon << '\n';
  for (const auto& fold : report.folds) {
    out << "fold " << fold.speaker_id << " true=" << fold.true_language << " decision="
        << (fold.abstained ? "ABSTAIN" : fold.decision);
    if (!fold.scores.empty()) {
      out << " scores";
      for (const auto& [language, score] : fold.scores)
        out << ' ' << language << '=' << detail::format_score(score);
    }
    if (!fold.ignored.empty()) {
      out << " ignored=";
      bool first = true;
      for (const auto& language : fold.ignored) {
        if (!first) out << ',';
        out << language;
        first = false;
      }
    }
    out << '\n';
  }
  out << render_confusion(report.matrix, report.classification_rate);
  return out.str();
}

inline nlohmann::json report_to_json(const EvaluationReport& report) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& fold : report.folds) {
    nlohmann::json scores(nlohmann::json::value_t::object);
    for (const auto& [language, score] : fold.scores) scores[language] = score;
    folds.push_back({{"speaker", fold.speaker_id},
                     {"true_language", fold.true_language},
                     {"decision", fold.abstained ? nlohmann::json() : nlohmann::json(fold.decision)},
                     {"abstained", fold.abstained},
                     {"scores", scores},
                     {"ignored", fold.ignored},
                     {"train_speakers", fold.train_speaker_ids}});
  }
  return nlohmann::json{
      {"mode", std::string(to_string(report.mode))},
      {"leave_one_out", report.leave_one_out},
      {"beta", report.beta},
      {"epsilon", report.epsilon},
      {"local_use_prior", report.local_use_prior},
      {"config",
       {{"alpha", report.config.alpha},
        {"max_p", report.config.max_p},
        {"min_count_per_speaker", report.config.min_count_per_speaker},
        {"sentences_per_speaker", report.config.sentences_per_speaker},
        {"max_sequences_per_language", report.config.max_sequences_per_language},
        {"overlapping", report.config.overlapping}}},
      {"languages", report.matrix.languages},
      {"totals", report.matrix.totals},
      {"confusion_percent", report.matrix.cells},
      {"abstain_percent", report.matrix.abstain_pct},
      {"classification_rate", report.classification_rate},
      {"folds", folds}};
}

}  // namespace phoneseq
