#pragma once

#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phoneseq/base.hpp"
#include "phoneseq/counting.hpp"
#include "phoneseq/extraction.hpp"

namespace phoneseq {

// Maximum-likelihood sequence model over the union of the discriminative
// sets. For every retained sequence it stores the normalized occurrence
// rate in every language, so all conditional probabilities reduce to
// ratios of those rates:
//
//   prior(i)                = mass(i) / total mass
//   seq_prob(s)             = sum_l rate_l(s) / total mass
//   seq_given_lang(s, i)    = rate_i(s) / mass(i)
//   posterior_given_seq     = (rate_i(s) + eps) / sum_l (rate_l(s) + eps)
//
// where mass(i) is the summed rate of language i's own set members.
// Additive smoothing eps keeps scores finite when a sequence was never
// seen in some language; eps = 0 gives the exact unsmoothed ratios at the
// price of -inf log scores in that case. Immutable once built; all
// probability calls are const and thread-safe.
class SequenceModel {
 public:
  struct Entry {
    std::vector<double> rates;  // per-language normalized count, model language order
    std::vector<int> owners;    // languages whose discriminative set holds the sequence
  };
  using SequenceTable = std::map<PhoneSequence, Entry, SeqOrder>;

  static SequenceModel build(std::span<const CountTable> tables,
                             std::span<const DiscriminativeSet> sets, double epsilon) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
      throw config_error("epsilon must be finite and >= 0");
    if (tables.empty()) throw data_error("model requires at least one language");
    if (sets.size() != tables.size())
      throw data_error("need exactly one discriminative set per language");

    SequenceModel model;
    model.epsilon_ = epsilon;
    for (const auto& table : tables) {
      for (const auto& language : model.languages_)
        if (language == table.language)
          throw data_error("duplicate count table for language '" + table.language + "'");
      model.languages_.push_back(table.language);
    }
    const std::size_t n = model.languages_.size();

    model.sets_.resize(n);
    std::vector<bool> filled(n, false);
    for (const auto& set : sets) {
      int index = model.find_language(set.language);
      if (index < 0) throw data_error("set for unknown language '" + set.language + "'");
      if (filled[static_cast<std::size_t>(index)])
        throw data_error("duplicate discriminative set for language '" + set.language + "'");
      filled[static_cast<std::size_t>(index)] = true;
      model.sets_[static_cast<std::size_t>(index)] = set;
    }

    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& sequence : model.sets_[i].sequences) {
        Entry& entry = model.table_[sequence];
        for (int owner : entry.owners)
          if (owner == static_cast<int>(i))
            throw data_error("sequence '" + join_phones(sequence) + "' listed twice in set '" +
                             model.languages_[i] + "'");
        entry.owners.push_back(static_cast<int>(i));
      }
    }
    for (auto& [sequence, entry] : model.table_) {
      entry.rates.resize(n);
      for (std::size_t l = 0; l < n; ++l) entry.rates[l] = tables[l].normalized(sequence);
    }
    model.finalize();
    return model;
  }

  const std::vector<LanguageId>& languages() const { return languages_; }
  std::size_t language_count() const { return languages_.size(); }
  const std::vector<DiscriminativeSet>& sets() const { return sets_; }
  const SequenceTable& sequences() const { return table_; }
  double epsilon() const { return epsilon_; }
  std::size_t max_sequence_length() const { return max_len_; }
  double language_mass(int lang) const { return mass_[check_lang(lang)]; }
  double total_mass() const { return total_mass_; }

  int find_language(std::string_view language) const {
    for (std::size_t i = 0; i < languages_.size(); ++i)
      if (languages_[i] == language) return static_cast<int>(i);
    return -1;
  }

  int language_index(std::string_view language) const {
    int index = find_language(language);
    if (index < 0) throw data_error("unknown language: '" + std::string(language) + "'");
    return index;
  }

  const Entry* find(std::span<const Phone> sequence) const {
    auto it = table_.find(sequence);
    return it == table_.end() ? nullptr : &it->second;
  }

  double prior(int lang) const { return mass_[check_lang(lang)] / total_mass_; }

  double seq_prob(std::span<const Phone> sequence) const {
    const Entry& entry = at(sequence);
    double sum = 0.0;
    for (double rate : entry.rates) sum += rate;
    return sum / total_mass_;
  }

  double seq_given_lang(std::span<const Phone> sequence, int lang) const {
    return at(sequence).rates[check_lang(lang)] / mass_[static_cast<std::size_t>(lang)];
  }

  double posterior_given_seq(std::span<const Phone> sequence, int lang) const {
    return smoothed_posterior(at(sequence), check_lang(lang));
  }

  // Sum of log posteriors over the observations; -inf only when eps = 0
  // and some observation was never seen in `lang`.
  double sum_log_posteriors(std::span<const PhoneSequence> observations, int lang) const {
    std::size_t l = check_lang(lang);
    double sum = 0.0;
    for (const auto& sequence : observations) sum += std::log(smoothed_posterior(at(sequence), l));
    return sum;
  }

  // Log joint score of a language given an observation list of h
  // sequences, treated as independent:
  //   (1 - h) * log prior + sum_m log posterior(s_m).
  // Duplicated observations each contribute their own factor.
  double log_posterior_given_obs(std::span<const PhoneSequence> observations, int lang) const {
    if (observations.empty()) throw data_error("empty observation list");
    double h = static_cast<double>(observations.size());
    return (1.0 - h) * std::log(prior(lang)) + sum_log_posteriors(observations, lang);
  }

  // name-based convenience overloads
  double prior(std::string_view language) const { return prior(language_index(language)); }
  double seq_given_lang(std::span<const Phone> s, std::string_view language) const {
    return seq_given_lang(s, language_index(language));
  }
  double posterior_given_seq(std::span<const Phone> s, std::string_view language) const {
    return posterior_given_seq(s, language_index(language));
  }
  double log_posterior_given_obs(std::span<const PhoneSequence> o, std::string_view language) const {
    return log_posterior_given_obs(o, language_index(language));
  }

  // Model file, version 1. Header `phoneseq-model v1 <n> <epsilon>`, then
  // one `<language> TAB <rate> TAB <phone ...>` line for every language
  // and every retained sequence (zero rates included), then one
  // `SET <language> <phone ...>` line per set member in rank order.
  // Rates are written with 17 significant digits and round-trip exactly.
  void save(std::ostream& out) const {
    out << "phoneseq-model v1 " << languages_.size() << ' ' << detail::format_double(epsilon_)
        << '\n';
    for (std::size_t l = 0; l < languages_.size(); ++l)
      for (const auto& [sequence, entry] : table_)
        out << languages_[l] << '\t' << detail::format_double(entry.rates[l]) << '\t'
            << join_phones(sequence) << '\n';
    for (const auto& set : sets_)
      for (const auto& sequence : set.sequences)
        out << "SET " << set.language << ' ' << join_phones(sequence) << '\n';
  }

  static SequenceModel load(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw parse_error(1, "missing model header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::split_tokens(line);
    if (header.size() != 4 || header[0] != "phoneseq-model" || header[1] != "v1")
      throw parse_error(line_no, "expected header 'phoneseq-model v1 <languages> <epsilon>'");
    std::uint64_t declared_n = detail::parse_uint(header[2], line_no, "language count");
    SequenceModel model;
    model.epsilon_ = detail::parse_double(header[3], line_no, "epsilon");
    if (!(model.epsilon_ >= 0.0) || !std::isfinite(model.epsilon_))
      throw parse_error(line_no, "epsilon must be finite and >= 0");

    struct RateLine {
      int lang;
      double rate;
      PhoneSequence sequence;
    };
    std::vector<RateLine> rate_lines;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line.rfind("SET ", 0) == 0) {
        auto tokens = detail::split_tokens(std::string_view(line).substr(4));
        if (tokens.size() < 2) throw parse_error(line_no, "expected 'SET <language> <phone ...>'");
        int lang = model.find_language(tokens[0]);
        if (lang < 0)
          throw parse_error(line_no, "set member for unknown language '" + std::string(tokens[0]) + "'");
        PhoneSequence sequence(tokens.begin() + 1, tokens.end());
        model.sets_[static_cast<std::size_t>(lang)].sequences.push_back(std::move(sequence));
      } else {
        std::size_t tab1 = line.find('\t');
        std::size_t tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos)
          throw parse_error(line_no, "expected '<language> TAB <rate> TAB <phone ...>'");
        std::string_view language(line.data(), tab1);
        std::string_view rate_text(line.data() + tab1 + 1, tab2 - tab1 - 1);
        auto phones = detail::split_tokens(std::string_view(line).substr(tab2 + 1));
        if (!valid_token(language) || phones.empty())
          throw parse_error(line_no, "expected '<language> TAB <rate> TAB <phone ...>'");
        int lang = model.find_language(language);
        if (lang < 0) {
          lang = static_cast<int>(model.languages_.size());
          model.languages_.emplace_back(language);
          model.sets_.push_back(DiscriminativeSet{std::string(language), {}});
        }
        RateLine entry;
        entry.lang = lang;
        entry.rate = detail::parse_double(rate_text, line_no, "rate");
        entry.sequence.assign(phones.begin(), phones.end());
        rate_lines.push_back(std::move(entry));
      }
    }

    const std::size_t n = model.languages_.size();
    if (n != declared_n)
      throw data_error("model header declares " + std::to_string(declared_n) +
                       " languages but file contains " + std::to_string(n));
    for (auto& line_entry : rate_lines) {
      Entry& entry = model.table_[line_entry.sequence];
      if (entry.rates.empty()) entry.rates.assign(n, std::numeric_limits<double>::quiet_NaN());
      double& slot = entry.rates[static_cast<std::size_t>(line_entry.lang)];
      if (!std::isnan(slot))
        throw data_error("duplicate rate for language '" +
                         model.languages_[static_cast<std::size_t>(line_entry.lang)] +
                         "' and sequence '" + join_phones(line_entry.sequence) + "'");
      slot = line_entry.rate;
    }
    for (const auto& [sequence, entry] : model.table_)
      for (std::size_t l = 0; l < n; ++l)
        if (entry.rates.size() != n || std::isnan(entry.rates[l]))
          throw data_error("missing rate for language '" + model.languages_[l] +
                           "' and sequence '" + join_phones(sequence) + "'");
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& sequence : model.sets_[i].sequences) {
        auto it = model.table_.find(sequence);
        if (it == model.table_.end())
          throw data_error("set member '" + join_phones(sequence) + "' has no rate lines");
        for (int owner : it->second.owners)
          if (owner == static_cast<int>(i))
            throw data_error("sequence '" + join_phones(sequence) + "' listed twice in set '" +
                             model.languages_[i] + "'");
        it->second.owners.push_back(static_cast<int>(i));
      }
    }
    for (const auto& [sequence, entry] : model.table_)
      if (entry.owners.empty())
        throw data_error("sequence '" + join_phones(sequence) + "' belongs to no set");
    model.finalize();
    return model;
  }

 private:
  SequenceModel() = default;

  std::size_t check_lang(int lang) const {
    if (lang < 0 || static_cast<std::size_t>(lang) >= languages_.size())
      throw data_error("language index out of range: " + std::to_string(lang));
    return static_cast<std::size_t>(lang);
  }

  const Entry& at(std::span<const Phone> sequence) const {
    auto it = table_.find(sequence);
    if (it == table_.end())
      throw data_error("sequence not in model: '" + join_phones(sequence) + "'");
    return it->second;
  }

  double smoothed_posterior(const Entry& entry, std::size_t lang) const {
    double denom = 0.0;
    for (double rate : entry.rates) denom += rate + epsilon_;
    if (denom <= 0.0)
      throw data_error("degenerate sequence with zero count in every language");
    return (entry.rates[lang] + epsilon_) / denom;
  }

  void finalize() {
    const std::size_t n = languages_.size();
    mass_.assign(n, 0.0);
    max_len_ = 0;
    for (const auto& [sequence, entry] : table_) {
      max_len_ = std::max(max_len_, sequence.size());
      for (double rate : entry.rates)
        if (!(rate >= 0.0) || !std::isfinite(rate))
          throw data_error("negative or non-finite count for sequence '" + join_phones(sequence) +
                           "'");
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& sequence : sets_[i].sequences) mass_[i] += table_.at(sequence).rates[i];
      if (!(mass_[i] > 0.0))
        throw data_error("language '" + languages_[i] +
                         "' has no discriminative sequence with positive count");
    }
    total_mass_ = 0.0;
    for (double mass : mass_) total_mass_ += mass;
  }

  std::vector<LanguageId> languages_;
  std::vector<DiscriminativeSet> sets_;
  SequenceTable table_;
  std::vector<double> mass_;
  double total_mass_ = 0.0;
  double epsilon_ = 0.0;
  std::size_t max_len_ = 0;
};

}  // namespace phoneseq
