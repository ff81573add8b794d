#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "textaug/errors.hpp"

namespace textaug {

/// A tokenized sentence. Producers guarantee no token is empty or contains
/// whitespace.
using TokenSeq = std::vector<std::string>;

/// Placeholder token for samples whose text cleans down to nothing, so that
/// dataset sizes stay stable through the pipeline.
inline const char* kEmptyToken = "<empty>";

/// Cleaning setup: stop words to drop and abbreviation expansions to apply.
/// Both lists ship as editable plain-text config files (see configs/).
struct CleanConfig {
  std::unordered_set<std::string> stopwords;
  std::map<std::string, std::string> abbreviations;
};

/// One stop word per line; '#' lines and blanks ignored.
inline std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stopword file: " + path);
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    words.insert(line);
  }
  return words;
}

/// One `abbr<TAB>expansion` entry per line; '#' lines and blanks ignored.
inline std::map<std::string, std::string> load_abbreviations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open abbreviation file: " + path);
  std::map<std::string, std::string> table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected 'abbr<TAB>expansion'");
    table[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return table;
}

/// Built-in defaults, mirrored by configs/stopwords.txt.
inline std::unordered_set<std::string> default_stopwords() {
  return {"a",   "an",  "and", "are", "as",  "at",  "be",  "by",  "for",
          "from", "has", "have", "i",  "in",  "is",  "it",  "its", "no",
          "of",  "on",  "or",  "that", "the", "to",  "was", "were", "will",
          "with"};
}

/// Built-in defaults, mirrored by configs/abbreviations.tsv.
inline std::map<std::string, std::string> default_abbreviations() {
  return {{"btw", "by the way"},   {"stfu", "shut the fuck up"},
          {"u", "you"},            {"r", "are"},
          {"ur", "your"},          {"lol", "laughing out loud"},
          {"lmao", "laughing my ass off"},
          {"idk", "i do not know"}, {"imo", "in my opinion"},
          {"plz", "please"},       {"thx", "thanks"},
          {"b4", "before"},        {"gr8", "great"},
          {"wtf", "what the fuck"}, {"omg", "oh my god"},
          {"smh", "shaking my head"}, {"tbh", "to be honest"},
          {"rn", "right now"},     {"irl", "in real life"},
          {"dm", "direct message"}};
}

inline CleanConfig default_clean_config() {
  return {default_stopwords(), default_abbreviations()};
}

namespace detail {
// Allowed output alphabet of clean(): ASCII letters, digits, apostrophe,
// space. Everything else acts as a token separator.
inline bool allowed_char(char c) {
  unsigned char u = static_cast<unsigned char>(c);
  return (u >= 'a' && u <= 'z') || (u >= '0' && u <= '9') || u == '\'' || u == ' ';
}
}  // namespace detail

/// Lowercase, strip punctuation/symbols/characters outside [a-z0-9' ],
/// drop stop words, collapse whitespace. Idempotent. May return "".
inline std::string clean(const std::string& text,
                         const std::unordered_set<std::string>& stopwords) {
  std::string lowered;
  lowered.reserve(text.size());
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    char l = (u >= 'A' && u <= 'Z') ? static_cast<char>(u - 'A' + 'a') : c;
    lowered.push_back(detail::allowed_char(l) ? l : ' ');
  }
  std::istringstream in(lowered);
  std::string word, out;
  while (in >> word) {
    if (stopwords.count(word)) continue;
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

inline std::string clean(const std::string& text, const CleanConfig& cfg) {
  return clean(text, cfg.stopwords);
}

/// Replaces whole-token matches against the table; everything else passes
/// through. Token boundaries are whitespace; output joined by single spaces.
inline std::string expand_abbreviations(const std::string& text,
                                        const std::map<std::string, std::string>& table) {
  std::istringstream in(text);
  std::string word, out;
  while (in >> word) {
    auto it = table.find(word);
    const std::string& piece = (it != table.end()) ? it->second : word;
    if (!out.empty()) out.push_back(' ');
    out += piece;
  }
  return out;
}

/// Whitespace tokenization with punctuation split off as single-character
/// tokens ("don't" -> [don, ', t]). For text made only of [a-z0-9 ] the
/// concatenation of tokens with single spaces reproduces the input; with
/// punctuation present the token sequence is stable under re-tokenization
/// of that joined form.
inline TokenSeq tokenize(const std::string& text) {
  TokenSeq tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  };
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      flush();
    } else if (std::isalnum(u)) {
      cur.push_back(c);
    } else {
      // punctuation/symbol: its own token
      flush();
      tokens.push_back(std::string(1, c));
    }
  }
  flush();
  return tokens;
}

inline std::string join_tokens(const TokenSeq& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

/// Full preprocessing used by the pipeline: clean, expand abbreviations,
/// tokenize. A sample that cleans down to nothing keeps a single sentinel
/// token so downstream counts stay aligned.
inline TokenSeq prepare_tokens(const std::string& text, const CleanConfig& cfg) {
  TokenSeq tokens = tokenize(expand_abbreviations(clean(text, cfg), cfg.abbreviations));
  if (tokens.empty()) tokens.push_back(kEmptyToken);
  return tokens;
}

}  // namespace textaug
