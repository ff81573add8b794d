#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "textaug/errors.hpp"
#include "textaug/textprep.hpp"

namespace textaug {

/// End-of-word marker. Appended to the last symbol of every word during
/// learning and application, so merges can distinguish word-final symbols.
inline const char* kBpeEndOfWord = "</w>";

/// Learned byte-pair-encoding: ordered merges plus the symbol inventory.
/// Applying the merges in learned order is deterministic.
struct BpeModel {
  std::vector<std::pair<std::string, std::string>> merges;
  std::set<std::string> vocab;
  int num_merges = 0;
};

namespace detail {

/// Splits a UTF-8 string into codepoint-sized chunks. Malformed bytes are
/// kept as single-byte symbols.
inline std::vector<std::string> utf8_chars(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if ((c & 0x80u) == 0x00u) len = 1;
    else if ((c & 0xE0u) == 0xC0u) len = 2;
    else if ((c & 0xF0u) == 0xE0u) len = 3;
    else if ((c & 0xF8u) == 0xF0u) len = 4;
    if (i + len > s.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0u) != 0x80u) {
        len = k;
        break;
      }
    }
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

inline std::vector<std::string> word_symbols(const std::string& word) {
  std::vector<std::string> sym = utf8_chars(word);
  if (!sym.empty()) sym.back() += kBpeEndOfWord;
  return sym;
}

/// One greedy left-to-right pass replacing adjacent (a,b) with a+b.
inline bool merge_pair_once(std::vector<std::string>& symbols,
                            const std::pair<std::string, std::string>& pair) {
  bool changed = false;
  std::vector<std::string> out;
  out.reserve(symbols.size());
  std::size_t i = 0;
  while (i < symbols.size()) {
    if (i + 1 < symbols.size() && symbols[i] == pair.first &&
        symbols[i + 1] == pair.second) {
      out.push_back(pair.first + pair.second);
      i += 2;
      changed = true;
    } else {
      out.push_back(symbols[i]);
      ++i;
    }
  }
  symbols = std::move(out);
  return changed;
}

}  // namespace detail

/// Greedy BPE learning over the word-frequency table of a tokenized corpus.
/// Each step merges the most frequent adjacent symbol pair; ties break
/// lexicographically on the pair. Stops early once no pair remains, so the
/// merge count is min(num_merges, merges possible).
inline BpeModel learn_bpe(const std::vector<TokenSeq>& corpus, int num_merges) {
  if (corpus.empty()) throw InputError("learn_bpe: empty corpus");
  if (num_merges < 0) throw InputError("learn_bpe: num_merges must be >= 0");

  std::map<std::string, std::int64_t> word_freq;
  for (const auto& sent : corpus)
    for (const auto& tok : sent) ++word_freq[tok];

  std::vector<std::pair<std::vector<std::string>, std::int64_t>> words;
  words.reserve(word_freq.size());
  BpeModel model;
  for (const auto& [word, freq] : word_freq) {
    auto sym = detail::word_symbols(word);
    for (const auto& s : sym) model.vocab.insert(s);
    words.emplace_back(std::move(sym), freq);
  }

  for (int step = 0; step < num_merges; ++step) {
    std::map<std::pair<std::string, std::string>, std::int64_t> pair_freq;
    for (const auto& [sym, freq] : words)
      for (std::size_t i = 0; i + 1 < sym.size(); ++i)
        pair_freq[{sym[i], sym[i + 1]}] += freq;
    if (pair_freq.empty()) break;

    // Max frequency; the std::map ordering makes the lexicographically
    // smallest pair win ties.
    auto best = pair_freq.begin();
    for (auto it = pair_freq.begin(); it != pair_freq.end(); ++it)
      if (it->second > best->second) best = it;

    const auto pair = best->first;
    for (auto& [sym, freq] : words) detail::merge_pair_once(sym, pair);
    model.merges.push_back(pair);
    model.vocab.insert(pair.first + pair.second);
  }
  model.num_merges = static_cast<int>(model.merges.size());
  return model;
}

/// Segments one token by replaying the learned merges in order. Subwords
/// carry the end-of-word marker on the final symbol; see
/// strip_bpe_markers() for the plain view.
inline std::vector<std::string> apply_bpe(const BpeModel& model, const std::string& token) {
  if (token.empty()) throw InputError("apply_bpe: empty token");
  std::vector<std::string> symbols = detail::word_symbols(token);
  for (const auto& merge : model.merges) {
    if (symbols.size() < 2) break;
    detail::merge_pair_once(symbols, merge);
  }
  return symbols;
}

/// Removes end-of-word markers. Concatenating the result reproduces the
/// original token exactly.
inline std::vector<std::string> strip_bpe_markers(std::vector<std::string> subwords) {
  const std::string marker = kBpeEndOfWord;
  for (auto& s : subwords) {
    if (s.size() >= marker.size() &&
        s.compare(s.size() - marker.size(), marker.size(), marker) == 0) {
      s.erase(s.size() - marker.size());
    }
  }
  return subwords;
}

/// Serialization: one `left right` merge pair per line, learned order.
inline void save_bpe(const BpeModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write BPE model: " + path);
  for (const auto& [a, b] : model.merges) out << a << ' ' << b << '\n';
  if (!out) throw IoError("write failed: " + path);
}

inline BpeModel load_bpe(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open BPE model: " + path);
  BpeModel model;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size())
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'left right'");
    model.merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
  }
  model.num_merges = static_cast<int>(model.merges.size());
  // Rebuild the derivable part of the inventory: merge outputs and their
  // constituent symbols.
  for (const auto& [a, b] : model.merges) {
    model.vocab.insert(a);
    model.vocab.insert(b);
    model.vocab.insert(a + b);
  }
  return model;
}

}  // namespace textaug
