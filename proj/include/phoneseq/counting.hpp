#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "phoneseq/base.hpp"
#include "phoneseq/corpus.hpp"

namespace phoneseq {
namespace detail {

struct IdSpanHash {
  using is_transparent = void;
  std::size_t operator()(std::span<const std::uint32_t> key) const noexcept {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (std::uint32_t id : key) {
      h ^= id;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
  std::size_t operator()(const std::vector<std::uint32_t>& key) const noexcept {
    return (*this)(std::span<const std::uint32_t>(key));
  }
};

struct IdSpanEq {
  using is_transparent = void;
  bool operator()(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) const noexcept {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
  }
};

// Streams utterances and tallies every contiguous phone run of length
// 1..max_p. Phones are interned to integer ids so the hot loop hashes
// id windows in place, with no per-window allocation.
class SequenceCounter {
 public:
  SequenceCounter(int max_p, bool overlapping) : max_p_(max_p), overlapping_(overlapping) {
    if (max_p < 1) throw config_error("max_p must be >= 1");
  }

  void add(const Utterance& utterance) {
    ++sentences_;
    ids_.clear();
    ids_.reserve(utterance.phones.size());
    for (const auto& phone : utterance.phones) ids_.push_back(intern(phone));
    const std::size_t m = ids_.size();
    if (!overlapping_) next_ok_.clear();
    for (std::size_t start = 0; start < m; ++start) {
      const std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(max_p_), m - start);
      for (std::size_t len = 1; len <= limit; ++len) {
        std::span<const std::uint32_t> window(ids_.data() + start, len);
        if (overlapping_) {
          bump(window);
        } else {
          // Greedy leftmost: a run is counted only if no counted
          // occurrence of the same sequence still covers this start.
          auto it = next_ok_.find(window);
          if (it == next_ok_.end()) {
            next_ok_.emplace(std::vector<std::uint32_t>(window.begin(), window.end()), start + len);
            bump(window);
          } else if (it->second <= start) {
            it->second = start + len;
            bump(window);
          }
        }
      }
    }
  }

  std::uint64_t sentences() const { return sentences_; }

  std::map<PhoneSequence, std::uint64_t, SeqOrder> take() const {
    std::map<PhoneSequence, std::uint64_t, SeqOrder> out;
    for (const auto& [ids, count] : counts_) {
      PhoneSequence seq;
      seq.reserve(ids.size());
      for (std::uint32_t id : ids) seq.push_back(names_[id]);
      out.emplace(std::move(seq), count);
    }
    return out;
  }

 private:
  std::uint32_t intern(const std::string& phone) {
    auto it = vocab_.find(phone);
    if (it != vocab_.end()) return it->second;
    auto id = static_cast<std::uint32_t>(names_.size());
    names_.push_back(phone);
    vocab_.emplace(names_.back(), id);
    return id;
  }

  void bump(std::span<const std::uint32_t> window) {
    auto it = counts_.find(window);
    if (it == counts_.end())
      counts_.emplace(std::vector<std::uint32_t>(window.begin(), window.end()), 1);
    else
      ++it->second;
  }

  int max_p_;
  bool overlapping_;
  std::uint64_t sentences_ = 0;
  std::deque<std::string> names_;  // stable storage backing vocab_ views
  std::unordered_map<std::string_view, std::uint32_t> vocab_;
  std::vector<std::uint32_t> ids_;
  std::unordered_map<std::vector<std::uint32_t>, std::uint64_t, IdSpanHash, IdSpanEq> counts_;
  std::unordered_map<std::vector<std::uint32_t>, std::size_t, IdSpanHash, IdSpanEq> next_ok_;
};

}  // namespace detail

using SequenceCountMap = std::map<PhoneSequence, std::uint64_t, SeqOrder>;

struct SequenceCounts {
  SequenceCountMap raw;
  std::uint64_t sentences = 0;
};

// Occurrence counts of every phone sequence of length 1..max_p across the
// utterances. Occurrences may overlap (every start position counts) unless
// overlapping is false, in which case matches of the same sequence are
// greedy left-to-right and disjoint. Sequences never cross utterance
// boundaries; empty utterances still count toward `sentences`.
inline SequenceCounts count_sequences(std::span<const Utterance> utterances, int max_p,
                                      bool overlapping = true) {
  detail::SequenceCounter counter(max_p, overlapping);
  for (const auto& utterance : utterances) counter.add(utterance);
  return SequenceCounts{counter.take(), counter.sentences()};
}

// Per-language occurrence counts, normalized against the number of
// sentences. Only sequences that actually occur are stored.
struct CountTable {
  LanguageId language;
  std::uint64_t sentence_count = 0;
  SequenceCountMap raw;

  // occurrences per sentence; 0 for absent sequences
  double normalized(std::span<const Phone> sequence) const {
    auto it = raw.find(sequence);
    if (it == raw.end() || sentence_count == 0) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(sentence_count);
  }

  std::map<PhoneSequence, double> normalized_counts() const {
    std::map<PhoneSequence, double> out;
    for (const auto& [seq, count] : raw)
      out.emplace(seq, static_cast<double>(count) / static_cast<double>(sentence_count));
    return out;
  }
};

inline CountTable build_count_table(const LanguageId& language, std::span<const Speaker> speakers,
                                    int max_p, bool overlapping = true) {
  detail::SequenceCounter counter(max_p, overlapping);
  for (const auto& speaker : speakers) {
    if (speaker.language != language)
      throw data_error("speaker '" + speaker.speaker_id + "' has language '" + speaker.language +
                       "', expected '" + language + "'");
    for (const auto& utterance : speaker.utterances) counter.add(utterance);
  }
  if (counter.sentences() == 0)
    throw data_error("language '" + language + "' has no sentences; normalization undefined");
  CountTable table;
  table.language = language;
  table.sentence_count = counter.sentences();
  table.raw = counter.take();
  return table;
}

// Debug dump: `<count> TAB <normalized> TAB <phone ...>`, highest raw
// count first, ties in lexicographic order.
inline void dump_counts(const CountTable& table, std::ostream& out) {
  std::vector<const std::pair<const PhoneSequence, std::uint64_t>*> entries;
  entries.reserve(table.raw.size());
  for (const auto& entry : table.raw) entries.push_back(&entry);
  std::sort(entries.begin(), entries.end(), [](const auto* a, const auto* b) {
    if (a->second != b->second) return a->second > b->second;
    return a->first < b->first;
  });
  for (const auto* entry : entries) {
    double normalized = static_cast<double>(entry->second) / static_cast<double>(table.sentence_count);
    out << entry->second << '\t' << detail::format_double(normalized) << '\t'
        << join_phones(entry->first) << '\n';
  }
}

}  // namespace phoneseq
