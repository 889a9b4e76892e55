#pragma once

#include <map>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phoneseq/phoneseq.hpp"

namespace testutil {

inline phoneseq::PhoneSequence seq(std::string_view text) {
  phoneseq::PhoneSequence out;
  for (auto token : phoneseq::detail::split_tokens(text)) out.emplace_back(token);
  return out;
}

inline phoneseq::CountTable make_table(
    std::string language, std::uint64_t sentences,
    const std::vector<std::pair<std::string, std::uint64_t>>& entries) {
  phoneseq::CountTable table;
  table.language = std::move(language);
  table.sentence_count = sentences;
  for (const auto& [text, raw] : entries) table.raw[seq(text)] = raw;
  return table;
}

inline phoneseq::Utterance utt(std::string speaker, std::string_view phones) {
  return phoneseq::Utterance{std::move(speaker), seq(phones)};
}

// Random tables plus sets suitable for SequenceModel::build: every
// language owns at least one sequence it actually produced.
struct RandomModelParts {
  std::vector<phoneseq::CountTable> tables;
  std::vector<phoneseq::DiscriminativeSet> sets;
};

inline RandomModelParts random_model_parts(std::mt19937_64& rng, int min_languages = 2,
                                           int max_languages = 6, int max_sequences = 50) {
  auto pick = [&rng](std::uint64_t bound) {
    return static_cast<std::size_t>(rng() % bound);
  };
  const std::size_t n_lang =
      static_cast<std::size_t>(min_languages) + pick(static_cast<std::uint64_t>(max_languages - min_languages + 1));
  const std::size_t n_seq = 1 + pick(static_cast<std::uint64_t>(max_sequences));

  std::set<phoneseq::PhoneSequence> pool;
  while (pool.size() < n_seq) {
    phoneseq::PhoneSequence s;
    std::size_t len = 1 + pick(3);
    for (std::size_t i = 0; i < len; ++i) s.push_back("p" + std::to_string(pick(6)));
    pool.insert(std::move(s));
  }
  std::vector<phoneseq::PhoneSequence> sequences(pool.begin(), pool.end());

  RandomModelParts parts;
  for (std::size_t l = 0; l < n_lang; ++l) {
    phoneseq::CountTable table;
    table.language = "L" + std::to_string(l);
    table.sentence_count = 1 + pick(50);
    for (const auto& s : sequences)
      if (pick(10) < 7) table.raw[s] = 1 + pick(200);
    parts.tables.push_back(std::move(table));
  }
  for (std::size_t l = 0; l < n_lang; ++l) {
    phoneseq::DiscriminativeSet set;
    set.language = parts.tables[l].language;
    for (const auto& [s, raw] : parts.tables[l].raw)
      if (pick(2) == 0) set.sequences.push_back(s);
    if (set.sequences.empty()) {
      if (parts.tables[l].raw.empty()) parts.tables[l].raw[sequences[pick(sequences.size())]] = 1 + pick(50);
      set.sequences.push_back(parts.tables[l].raw.begin()->first);
    }
    parts.sets.push_back(std::move(set));
  }
  return parts;
}

}  // namespace testutil
