#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "phoneseq/base.hpp"
#include "phoneseq/counting.hpp"

namespace phoneseq {

struct ExtractionConfig {
  // A sequence is discriminative for a language when its normalized count
  // there is at least alpha times its normalized count in every other
  // language.
  double alpha = 4.0;
  // maximum sequence length, in phones
  int max_p = 3;
  // eligibility floor, in occurrences per speaker; converted to the
  // per-sentence scale of the count tables via sentences_per_speaker
  double min_count_per_speaker = 50.0;
  int sentences_per_speaker = 100;
  int max_sequences_per_language = 30;
  // occurrence convention shared by counting and observation matching
  bool overlapping = true;

  void validate() const {
    if (!(alpha >= 1.0)) throw config_error("alpha must be >= 1");
    if (max_p < 1) throw config_error("max_p must be >= 1");
    if (!(min_count_per_speaker >= 0.0))
      throw config_error("min_count_per_speaker must be >= 0");
    if (sentences_per_speaker < 1)
      throw config_error("sentences_per_speaker must be >= 1");
    if (max_sequences_per_language < 1)
      throw config_error("max_sequences_per_language must be >= 1");
  }
};

// The sequences retained for one language, highest normalized count first.
struct DiscriminativeSet {
  LanguageId language;
  std::vector<PhoneSequence> sequences;

  bool operator==(const DiscriminativeSet&) const = default;
};

namespace detail {

inline const CountTable& table_for(std::span<const CountTable> tables, std::string_view language) {
  for (const auto& table : tables)
    if (table.language == language) return table;
  throw data_error("no count table for language '" + std::string(language) + "'");
}

}  // namespace detail

// True iff the sequence's normalized count in `language` dominates every
// other language by the factor alpha (the boundary case counts as
// dominated: >= not >). A language with no entry contributes count 0.
inline bool is_discriminative(std::span<const Phone> sequence, std::string_view language,
                              std::span<const CountTable> tables, double alpha) {
  const CountTable& own = detail::table_for(tables, language);
  const double own_count = own.normalized(sequence);
  for (const auto& table : tables) {
    if (&table == &own) continue;
    if (own_count < alpha * table.normalized(sequence)) return false;
  }
  return true;
}

// Selects each language's discriminative set: eligibility floor first,
// then the dominance test, then ranking by normalized count (ties broken
// shorter-first, then lexicographic) truncated to the per-language cap.
inline std::vector<DiscriminativeSet> extract_sets(std::span<const CountTable> tables,
                                                   const ExtractionConfig& config) {
  config.validate();
  if (tables.size() < 2) throw data_error("extraction requires count tables for at least 2 languages");
  for (std::size_t i = 0; i < tables.size(); ++i)
    for (std::size_t j = i + 1; j < tables.size(); ++j)
      if (tables[i].language == tables[j].language)
        throw data_error("duplicate count table for language '" + tables[i].language + "'");

  std::vector<DiscriminativeSet> sets;
  sets.reserve(tables.size());
  for (const auto& table : tables) {
    struct Candidate {
      const PhoneSequence* sequence;
      double count;
    };
    std::vector<Candidate> candidates;
    for (const auto& [sequence, raw] : table.raw) {
      if (static_cast<int>(sequence.size()) > config.max_p) continue;
      double normalized = static_cast<double>(raw) / static_cast<double>(table.sentence_count);
      if (normalized * config.sentences_per_speaker < config.min_count_per_speaker) continue;
      if (!is_discriminative(sequence, table.language, tables, config.alpha)) continue;
      candidates.push_back(Candidate{&sequence, normalized});
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      if (a.count != b.count) return a.count > b.count;
      return SeqOrder{}(*a.sequence, *b.sequence);
    });
    if (candidates.size() > static_cast<std::size_t>(config.max_sequences_per_language))
      candidates.resize(static_cast<std::size_t>(config.max_sequences_per_language));

    DiscriminativeSet set;
    set.language = table.language;
    set.sequences.reserve(candidates.size());
    for (const auto& candidate : candidates) set.sequences.push_back(*candidate.sequence);
    sets.push_back(std::move(set));
  }
  return sets;
}

}  // namespace phoneseq
