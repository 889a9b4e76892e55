#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "phoneseq/base.hpp"
#include "phoneseq/corpus.hpp"
#include "phoneseq/model.hpp"

namespace phoneseq {

enum class Mode { global, local };

inline std::string_view to_string(Mode mode) {
  return mode == Mode::global ? "global" : "local";
}

inline Mode mode_from_string(std::string_view text) {
  if (text == "global") return Mode::global;
  if (text == "local") return Mode::local;
  throw config_error("unknown mode: '" + std::string(text) + "' (expected global or local)");
}

// The model sequences found in a speaker's transcriptions. Each occurrence
// appears once in `global`; when a sequence belongs to several languages'
// sets it is also appended to each of those per-language lists.
struct ObservationList {
  std::vector<PhoneSequence> global;
  std::map<LanguageId, std::vector<PhoneSequence>> per_language;

  bool empty() const { return global.empty(); }
};

// Sliding-window scan of the utterances for model sequences, using the
// same occurrence convention as counting. Occurrences are recorded in
// scan order: by utterance, then start position, then length.
inline ObservationList collect_observations(const SequenceModel& model,
                                            std::span<const Utterance> utterances,
                                            bool overlapping = true) {
  ObservationList obs;
  for (const auto& language : model.languages()) obs.per_language[language];
  const std::size_t max_len = model.max_sequence_length();

  std::map<PhoneSequence, std::size_t, SeqOrder> next_ok;
  for (const auto& utterance : utterances) {
    if (!overlapping) next_ok.clear();
    const auto& phones = utterance.phones;
    for (std::size_t start = 0; start < phones.size(); ++start) {
      const std::size_t limit = std::min(max_len, phones.size() - start);
      for (std::size_t len = 1; len <= limit; ++len) {
        std::span<const Phone> window(phones.data() + start, len);
        const SequenceModel::Entry* entry = model.find(window);
        if (!entry) continue;
        if (!overlapping) {
          auto it = next_ok.find(window);
          if (it != next_ok.end() && it->second > start) continue;
          if (it != next_ok.end())
            it->second = start + len;
          else
            next_ok.emplace(PhoneSequence(window.begin(), window.end()), start + len);
        }
        PhoneSequence sequence(window.begin(), window.end());
        for (int owner : entry->owners)
          obs.per_language[model.languages()[static_cast<std::size_t>(owner)]].push_back(sequence);
        obs.global.push_back(std::move(sequence));
      }
    }
  }
  return obs;
}

struct ClassificationResult {
  LanguageId decision;
  Mode mode = Mode::global;
  std::map<LanguageId, double> scores;   // log scale
  std::set<LanguageId> ignored;          // local mode only
  ObservationList observations;
};

namespace detail {

// First index attaining the maximum; earlier entries win ties.
inline std::size_t argmax_index(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

}  // namespace detail

// Global rule: pool all observations and pick the language with the
// highest joint log score. Ties break toward the earlier model language.
inline ClassificationResult classify_global(const SequenceModel& model, ObservationList obs) {
  if (obs.global.empty()) throw data_error("no evidence: no model sequence observed");
  ClassificationResult result;
  result.mode = Mode::global;
  std::vector<double> scores(model.language_count());
  for (std::size_t l = 0; l < model.language_count(); ++l) {
    scores[l] = model.log_posterior_given_obs(obs.global, static_cast<int>(l));
    result.scores[model.languages()[l]] = scores[l];
  }
  result.decision = model.languages()[detail::argmax_index(scores)];
  result.observations = std::move(obs);
  return result;
}

// Local rule: score each language on its own observation list, normalized
// by that list's size so the scores are comparable. A language whose list
// is out-evidenced by a factor beta (some other list is at least beta
// times larger) is ignored; languages with the largest list are never
// ignored. `use_prior` keeps the joint score's prior-correction term; it
// can be dropped for sensitivity analysis.
inline ClassificationResult classify_local(const SequenceModel& model, ObservationList obs,
                                           double beta, bool use_prior = true) {
  if (!(beta >= 1.0)) throw config_error("beta must be >= 1");
  const std::size_t n = model.language_count();
  std::vector<std::size_t> cards(n, 0);
  std::size_t max_card = 0;
  for (std::size_t l = 0; l < n; ++l) {
    auto it = obs.per_language.find(model.languages()[l]);
    if (it != obs.per_language.end()) cards[l] = it->second.size();
    max_card = std::max(max_card, cards[l]);
  }
  if (max_card == 0) throw data_error("no evidence: every per-language observation list is empty");

  ClassificationResult result;
  result.mode = Mode::local;
  std::vector<double> scores(n, -std::numeric_limits<double>::infinity());
  std::vector<bool> ignored(n, false);
  for (std::size_t l = 0; l < n; ++l) {
    // Lists tied with the largest are kept regardless of beta.
    ignored[l] = cards[l] < max_card &&
                 static_cast<double>(max_card) >= beta * static_cast<double>(cards[l]);
    if (cards[l] > 0) {
      const auto& list = obs.per_language.at(model.languages()[l]);
      double score = use_prior ? model.log_posterior_given_obs(list, static_cast<int>(l))
                               : model.sum_log_posteriors(list, static_cast<int>(l));
      scores[l] = score / static_cast<double>(cards[l]);
    }
    result.scores[model.languages()[l]] = scores[l];
    if (ignored[l]) result.ignored.insert(model.languages()[l]);
  }

  std::size_t best = n;  // there is always a non-ignored language
  for (std::size_t l = 0; l < n; ++l) {
    if (ignored[l]) continue;
    if (best == n || scores[l] > scores[best]) best = l;
  }
  result.decision = model.languages()[best];
  result.observations = std::move(obs);
  return result;
}

}  // namespace phoneseq
