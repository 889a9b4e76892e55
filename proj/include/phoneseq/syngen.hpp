#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "phoneseq/base.hpp"
#include "phoneseq/corpus.hpp"

namespace phoneseq {

// A phone sequence planted into one language's sentences at an expected
// number of copies per sentence.
struct Signature {
  PhoneSequence sequence;
  double rate = 0.0;

  bool operator==(const Signature&) const = default;
};

// Recipe for a synthetic labeled corpus: background phones drawn from a
// categorical distribution, with per-language signatures spliced in. The
// same seed always yields the same corpus.
struct SynthSpec {
  std::vector<LanguageId> languages;
  std::vector<int> speakers_per_language;  // aligned with languages
  int sentences_per_speaker = 100;
  int sentence_length = 12;
  std::vector<Phone> inventory;
  std::vector<double> background_weights;  // empty means uniform
  std::map<LanguageId, std::vector<Signature>> signatures;
  std::uint64_t seed = 0;

  void validate() const {
    if (languages.empty()) throw config_error("languages: at least one language required");
    std::set<std::string_view> seen;
    for (const auto& language : languages) {
      if (!valid_token(language)) throw config_error("languages: invalid id '" + language + "'");
      if (!seen.insert(language).second)
        throw config_error("languages: duplicate id '" + language + "'");
    }
    if (speakers_per_language.size() != languages.size())
      throw config_error("speakers_per_language: need one count per language");
    for (int count : speakers_per_language)
      if (count < 1) throw config_error("speakers_per_language: counts must be >= 1");
    if (sentences_per_speaker < 1) throw config_error("sentences_per_speaker: must be >= 1");
    if (sentence_length < 1) throw config_error("sentence_length: must be >= 1");
    if (inventory.empty()) throw config_error("inventory: at least one phone required");
    std::set<std::string_view> phones;
    for (const auto& phone : inventory) {
      if (!valid_token(phone)) throw config_error("inventory: invalid phone '" + phone + "'");
      if (!phones.insert(phone).second)
        throw config_error("inventory: duplicate phone '" + phone + "'");
    }
    if (!background_weights.empty()) {
      if (background_weights.size() != inventory.size())
        throw config_error("background_weights: need one weight per inventory phone");
      double total = 0.0;
      for (double w : background_weights) {
        if (!(w >= 0.0) || !std::isfinite(w))
          throw config_error("background_weights: weights must be finite and >= 0");
        total += w;
      }
      if (!(total > 0.0)) throw config_error("background_weights: weights must not all be zero");
    }
    for (const auto& [language, sigs] : signatures) {
      if (std::find(languages.begin(), languages.end(), language) == languages.end())
        throw config_error("signatures: undeclared language '" + language + "'");
      for (const auto& signature : sigs) {
        if (signature.sequence.empty())
          throw config_error("signatures: empty sequence for language '" + language + "'");
        if (signature.sequence.size() > static_cast<std::size_t>(sentence_length))
          throw config_error("signatures: sequence '" + join_phones(signature.sequence) +
                             "' longer than sentence_length");
        if (!(signature.rate >= 0.0) || !std::isfinite(signature.rate))
          throw config_error("signatures: rate must be finite and >= 0 for language '" + language +
                             "'");
        for (const auto& phone : signature.sequence)
          if (!phones.count(phone))
            throw config_error("signatures: phone '" + phone + "' not in inventory");
      }
    }
  }
};

namespace detail {

// Samplers are hand-rolled on top of the standard-specified mt19937_64
// stream, so the seed-to-corpus mapping does not depend on the standard
// library's distribution implementations.

inline double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t next_below(std::mt19937_64& rng, std::uint64_t bound) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(rng()) * bound) >> 64);
}

inline int sample_poisson(std::mt19937_64& rng, double rate) {
  if (rate <= 0.0) return 0;
  const double threshold = std::exp(-rate);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= next_unit(rng);
  } while (p > threshold);
  return k - 1;
}

inline std::size_t sample_categorical(std::mt19937_64& rng, const std::vector<double>& cumulative) {
  double u = next_unit(rng) * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  std::size_t index = static_cast<std::size_t>(it - cumulative.begin());
  return std::min(index, cumulative.size() - 1);
}

}  // namespace detail

// Builds the corpus described by the spec. Sentences are background phones
// with each signature spliced in a Poisson-distributed number of times;
// injected copies replace background phones and never overlap each other.
inline LabeledCorpus generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  std::vector<double> cumulative;
  cumulative.reserve(spec.inventory.size());
  double total = 0.0;
  for (std::size_t i = 0; i < spec.inventory.size(); ++i) {
    total += spec.background_weights.empty() ? 1.0 : spec.background_weights[i];
    cumulative.push_back(total);
  }

  LabeledCorpus corpus;
  corpus.languages = spec.languages;
  for (std::size_t li = 0; li < spec.languages.size(); ++li) {
    const auto& language = spec.languages[li];
    const std::vector<Signature>* sigs = nullptr;
    if (auto it = spec.signatures.find(language); it != spec.signatures.end()) sigs = &it->second;

    int digits = 1;
    for (int v = spec.speakers_per_language[li]; v >= 10; v /= 10) ++digits;
    for (int s = 1; s <= spec.speakers_per_language[li]; ++s) {
      std::string number = std::to_string(s);
      std::string speaker_id =
          language + "_" + std::string(static_cast<std::size_t>(digits) - number.size(), '0') + number;
      Speaker speaker{speaker_id, language, {}};
      speaker.utterances.reserve(static_cast<std::size_t>(spec.sentences_per_speaker));
      for (int sent = 0; sent < spec.sentences_per_speaker; ++sent) {
        Utterance utterance{speaker_id, {}};
        utterance.phones.reserve(static_cast<std::size_t>(spec.sentence_length));
        for (int p = 0; p < spec.sentence_length; ++p)
          utterance.phones.push_back(spec.inventory[detail::sample_categorical(rng, cumulative)]);
        if (sigs) {
          std::vector<std::pair<std::size_t, std::size_t>> occupied;  // [begin, end)
          for (const auto& signature : *sigs) {
            int copies = detail::sample_poisson(rng, signature.rate);
            const std::size_t len = signature.sequence.size();
            const std::size_t positions = static_cast<std::size_t>(spec.sentence_length) - len + 1;
            for (int copy = 0; copy < copies; ++copy) {
              // rejection-sample a slot that misses every earlier injection
              for (int attempt = 0; attempt < 100; ++attempt) {
                std::size_t begin = detail::next_below(rng, positions);
                std::size_t end = begin + len;
                bool clash = false;
                for (auto [b, e] : occupied)
                  if (begin < e && b < end) {
                    clash = true;
                    break;
                  }
                if (clash) continue;
                std::copy(signature.sequence.begin(), signature.sequence.end(),
                          utterance.phones.begin() + static_cast<std::ptrdiff_t>(begin));
                occupied.emplace_back(begin, end);
                break;
              }
            }
          }
        }
        speaker.utterances.push_back(std::move(utterance));
      }
      corpus.speakers.push_back(std::move(speaker));
    }
  }
  return corpus;
}

// Key-value spec file: `key = value` lines, '#' comments, blank lines
// ignored. `signature` may repeat, one line per planted sequence:
//   signature = <language> <rate> <phone> <phone> ...
// `speakers_per_language` takes either one count per language or a single
// count applied to all.
inline SynthSpec parse_synth_spec(std::istream& in) {
  SynthSpec spec;
  std::vector<std::string> speaker_counts;
  std::size_t speaker_counts_line = 0;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](std::size_t at, const std::string& message) -> void {
    throw config_error("spec line " + std::to_string(at) + ": " + message);
  };
  auto to_double = [&](std::string_view text, const char* what) -> double {
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
      fail(line_no, std::string(what) + ": not a number: '" + std::string(text) + "'");
    return value;
  };
  auto to_count = [&](std::string_view text, const char* what, std::size_t at) -> std::uint64_t {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
      fail(at, std::string(what) + ": not a non-negative integer: '" + std::string(text) + "'");
    return value;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto tokens = detail::split_tokens(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    if (tokens.size() < 3 || tokens[1] != "=") fail(line_no, "expected '<key> = <value> ...'");
    std::string_view key = tokens[0];
    std::vector<std::string_view> values(tokens.begin() + 2, tokens.end());
    auto single = [&]() -> std::string_view {
      if (values.size() != 1)
        fail(line_no, "key '" + std::string(key) + "' takes exactly one value");
      return values[0];
    };

    if (key == "languages") {
      spec.languages.assign(values.begin(), values.end());
    } else if (key == "speakers_per_language") {
      speaker_counts.assign(values.begin(), values.end());
      speaker_counts_line = line_no;
    } else if (key == "sentences_per_speaker") {
      spec.sentences_per_speaker =
          static_cast<int>(to_count(single(), "sentences_per_speaker", line_no));
    } else if (key == "sentence_length") {
      spec.sentence_length = static_cast<int>(to_count(single(), "sentence_length", line_no));
    } else if (key == "inventory") {
      spec.inventory.assign(values.begin(), values.end());
    } else if (key == "background_weights") {
      spec.background_weights.clear();
      for (auto value : values)
        spec.background_weights.push_back(to_double(value, "background_weights"));
    } else if (key == "signature") {
      if (values.size() < 3) fail(line_no, "signature needs '<language> <rate> <phone> ...'");
      Signature signature;
      signature.rate = to_double(values[1], "signature rate");
      signature.sequence.assign(values.begin() + 2, values.end());
      spec.signatures[std::string(values[0])].push_back(std::move(signature));
    } else if (key == "seed") {
      spec.seed = to_count(single(), "seed", line_no);
    } else {
      fail(line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  if (speaker_counts.size() == 1 && spec.languages.size() > 1)
    speaker_counts.assign(spec.languages.size(), speaker_counts[0]);
  spec.speakers_per_language.clear();
  for (const auto& count : speaker_counts)
    spec.speakers_per_language.push_back(
        static_cast<int>(to_count(count, "speakers_per_language", speaker_counts_line)));
  spec.validate();
  return spec;
}

}  // namespace phoneseq
