#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace phoneseq {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad parameters or malformed configuration files. CLI exit code 1.
struct config_error : error {
  using error::error;
};

// Malformed or inconsistent input data. CLI exit code 2.
struct data_error : error {
  using error::error;
};

struct parse_error : data_error {
  std::size_t line_number;
  parse_error(std::size_t line, const std::string& message)
      : data_error("line " + std::to_string(line) + ": " + message),
        line_number(line) {}
};

// A phone is the symbol a phonetic recognizer emits for one speech sound.
using Phone = std::string;

// Contiguous run of phones; the feature unit of the whole pipeline.
// Equality is element-wise and order-sensitive.
using PhoneSequence = std::vector<Phone>;

using LanguageId = std::string;

// Orders sequences shorter-first, then element-wise lexicographic.
// Transparent so windows over interned token arrays can be looked up
// without materializing a PhoneSequence.
struct SeqOrder {
  using is_transparent = void;
  bool operator()(std::span<const Phone> a, std::span<const Phone> b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }
};

inline std::string join_phones(std::span<const Phone> sequence) {
  std::string out;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    if (i) out += ' ';
    out += sequence[i];
  }
  return out;
}

// Tokens (speaker ids, language ids, phone labels) are non-empty and free
// of the file format's separators.
inline bool valid_token(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token)
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v')
      return false;
  return true;
}

namespace detail {

inline std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

// Shortest decimal form that round-trips a double exactly.
inline std::string format_double(double value) {
  char buf[64];
  int n = std::snprintf(buf, sizeof(buf), "%.17g", value);
  return std::string(buf, static_cast<std::size_t>(n));
}

inline double parse_double(std::string_view text, std::size_t line, std::string_view what) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw parse_error(line, std::string(what) + ": not a number: '" + std::string(text) + "'");
  return value;
}

inline std::uint64_t parse_uint(std::string_view text, std::size_t line, std::string_view what) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw parse_error(line, std::string(what) + ": not a non-negative integer: '" + std::string(text) + "'");
  return value;
}

}  // namespace detail
}  // namespace phoneseq
