#pragma once

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "phoneseq/base.hpp"

namespace phoneseq {

// One recognized sentence. Sequences never span utterance boundaries and
// the utterance is the unit counts are normalized against.
struct Utterance {
  std::string speaker_id;
  std::vector<Phone> phones;  // may be empty

  bool operator==(const Utterance&) const = default;
};

struct Speaker {
  std::string speaker_id;
  LanguageId language;
  std::vector<Utterance> utterances;

  bool operator==(const Speaker&) const = default;
};

// Phone-transcribed speech grouped by speaker, each speaker labeled with
// a native language. Immutable once built; safe to share across threads.
struct LabeledCorpus {
  std::vector<LanguageId> languages;  // declaration order
  std::vector<Speaker> speakers;

  bool operator==(const LabeledCorpus&) const = default;

  const Speaker* find_speaker(std::string_view speaker_id) const {
    for (const auto& speaker : speakers)
      if (speaker.speaker_id == speaker_id) return &speaker;
    return nullptr;
  }

  bool has_language(std::string_view language) const {
    for (const auto& l : languages)
      if (l == language) return true;
    return false;
  }

  std::size_t total_utterances() const {
    std::size_t n = 0;
    for (const auto& speaker : speakers) n += speaker.utterances.size();
    return n;
  }
};

inline void validate(const LabeledCorpus& corpus) {
  std::unordered_map<std::string_view, std::string_view> seen_speakers;
  for (const auto& language : corpus.languages)
    if (!valid_token(language))
      throw data_error("invalid language id: '" + language + "'");
  for (const auto& speaker : corpus.speakers) {
    if (!valid_token(speaker.speaker_id) || speaker.speaker_id.front() == '#')
      throw data_error("invalid speaker id: '" + speaker.speaker_id + "'");
    if (!corpus.has_language(speaker.language))
      throw data_error("speaker '" + speaker.speaker_id + "' has undeclared language '" +
                       speaker.language + "'");
    if (!seen_speakers.emplace(speaker.speaker_id, speaker.language).second)
      throw data_error("duplicate speaker id: '" + speaker.speaker_id + "'");
    for (const auto& utterance : speaker.utterances) {
      if (utterance.speaker_id != speaker.speaker_id)
        throw data_error("utterance speaker id '" + utterance.speaker_id +
                         "' does not match speaker '" + speaker.speaker_id + "'");
      for (const auto& phone : utterance.phones)
        if (!valid_token(phone))
          throw data_error("invalid phone label: '" + phone + "'");
    }
  }
}

// Transcription format: one utterance per line,
//   <speaker_id> <language_id> <phone> <phone> ...
// separated by spaces or tabs. '#' starts a comment line; blank lines are
// skipped. A line with only speaker and language is an empty utterance.
inline LabeledCorpus parse_corpus(std::istream& in) {
  LabeledCorpus corpus;
  std::unordered_map<std::string, std::size_t> speaker_index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto tokens = detail::split_tokens(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    if (tokens.size() < 2)
      throw parse_error(line_no, "expected '<speaker> <language> <phone> ...'");

    std::string speaker_id(tokens[0]);
    std::string language(tokens[1]);
    auto [it, inserted] = speaker_index.emplace(speaker_id, corpus.speakers.size());
    if (inserted) {
      if (!corpus.has_language(language)) corpus.languages.push_back(language);
      corpus.speakers.push_back(Speaker{speaker_id, language, {}});
    } else if (corpus.speakers[it->second].language != language) {
      throw parse_error(line_no, "speaker '" + speaker_id + "' already declared with language '" +
                                     corpus.speakers[it->second].language + "'");
    }

    Utterance utterance{speaker_id, {}};
    utterance.phones.reserve(tokens.size() - 2);
    for (std::size_t i = 2; i < tokens.size(); ++i)
      utterance.phones.emplace_back(tokens[i]);
    corpus.speakers[it->second].utterances.push_back(std::move(utterance));
  }
  if (corpus.speakers.empty()) throw data_error("no utterances in input");
  return corpus;
}

inline void serialize_corpus(const LabeledCorpus& corpus, std::ostream& out) {
  validate(corpus);
  for (const auto& speaker : corpus.speakers) {
    for (const auto& utterance : speaker.utterances) {
      out << speaker.speaker_id << ' ' << speaker.language;
      for (const auto& phone : utterance.phones) out << ' ' << phone;
      out << '\n';
    }
  }
}

// Every declared language maps to a (possibly empty) speaker list; the
// parts partition the speaker set.
inline std::map<LanguageId, std::vector<Speaker>> partition_by_language(
    const LabeledCorpus& corpus) {
  std::map<LanguageId, std::vector<Speaker>> parts;
  for (const auto& language : corpus.languages) parts.emplace(language, std::vector<Speaker>{});
  for (const auto& speaker : corpus.speakers) parts[speaker.language].push_back(speaker);
  return parts;
}

struct LooSplit {
  LabeledCorpus train;
  Speaker test;
};

// Removes one speaker; only that speaker's language loses data and the
// language list is unchanged.
inline LooSplit leave_one_out_split(const LabeledCorpus& corpus, std::string_view held_out) {
  const Speaker* test = corpus.find_speaker(held_out);
  if (!test) throw data_error("unknown speaker id: '" + std::string(held_out) + "'");
  LooSplit split;
  split.test = *test;
  split.train.languages = corpus.languages;
  split.train.speakers.reserve(corpus.speakers.size() - 1);
  for (const auto& speaker : corpus.speakers)
    if (speaker.speaker_id != held_out) split.train.speakers.push_back(speaker);
  return split;
}

}  // namespace phoneseq
