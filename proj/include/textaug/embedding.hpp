#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "textaug/errors.hpp"
#include "textaug/textprep.hpp"

namespace textaug {

/// Word-vector store in the text .vec format (header `<count> <dim>`, then
/// one `word v1 .. vdim` row per line). Out-of-vocabulary words get a vector
/// composed from the character n-grams of `<word>` that happen to be in the
/// table, mirroring the subword idea behind the source embeddings.
struct EmbeddingTable {
  int dim = 0;
  std::unordered_map<std::string, Eigen::RowVectorXd> vectors;
  std::pair<int, int> subword_ngram_range = {3, 6};

  bool contains(const std::string& word) const { return vectors.count(word) > 0; }

  /// Total lookup: stored vector, else mean of in-vocabulary character
  /// n-grams of "<word>" (boundary markers included), else zeros.
  Eigen::RowVectorXd lookup(const std::string& word) const {
    if (word.empty()) throw InputError("lookup: empty word");
    auto it = vectors.find(word);
    if (it != vectors.end()) return it->second;

    const std::string marked = "<" + word + ">";
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(dim);
    int matches = 0;
    const std::size_t len = marked.size();
    for (int n = subword_ngram_range.first; n <= subword_ngram_range.second; ++n) {
      if (static_cast<std::size_t>(n) > len) break;
      for (std::size_t i = 0; i + n <= len; ++i) {
        auto git = vectors.find(marked.substr(i, n));
        if (git != vectors.end()) {
          sum += git->second;
          ++matches;
        }
      }
    }
    if (matches == 0) return Eigen::RowVectorXd::Zero(dim);
    return sum / static_cast<double>(matches);
  }
};

/// A sample encoded as a fixed-shape [seq_len x dim] matrix. Rows past the
/// token count are zero and masked off.
struct EncodedSample {
  Eigen::MatrixXd matrix;
  std::vector<std::uint8_t> mask;
  int valid_len = 0;
};

inline EmbeddingTable load_vec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open .vec file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  std::size_t count = 0;
  int dim = 0;
  {
    std::size_t sp = line.find(' ');
    if (sp == std::string::npos)
      throw ParseError(path + ":1: header must be '<count> <dim>'");
    auto r1 = std::from_chars(line.data(), line.data() + sp, count);
    auto r2 = std::from_chars(line.data() + sp + 1, line.data() + line.size(), dim);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || dim <= 0)
      throw ParseError(path + ":1: header must be '<count> <dim>'");
  }

  EmbeddingTable table;
  table.dim = dim;
  table.vectors.reserve(count);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::size_t sp = line.find(' ');
    if (sp == std::string::npos || sp == 0)
      throw ParseError(path + ":" + std::to_string(lineno) + ": missing vector values");
    std::string word = line.substr(0, sp);

    Eigen::RowVectorXd vec(dim);
    const char* p = line.data() + sp;
    const char* end = line.data() + line.size();
    int got = 0;
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      if (got >= dim)
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": expected " + std::to_string(dim) + " values");
      double v = 0.0;
      auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc{})
        throw ParseError(path + ":" + std::to_string(lineno) + ": malformed float");
      vec(got++) = v;
      p = res.ptr;
    }
    if (got != dim)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(dim) + " values, got " + std::to_string(got));
    // duplicate words keep the first occurrence
    table.vectors.emplace(std::move(word), std::move(vec));
  }
  if (table.vectors.empty()) throw ParseError(path + ": no vectors");
  return table;
}

/// Writes the same text format back out with round-trippable floats.
inline void save_vec(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write .vec file: " + path);
  out << table.vectors.size() << ' ' << table.dim << '\n';
  char buf[40];
  for (const auto& [word, vec] : table.vectors) {
    out << word;
    for (int i = 0; i < table.dim; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", vec(i));
      out << ' ' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

/// Stacks token lookups into a [seq_len x dim] matrix: first
/// min(len, seq_len) rows in token order, the rest zero-padded; over-length
/// input is truncated at seq_len.
inline EncodedSample encode_sample(const EmbeddingTable& table, const TokenSeq& tokens,
                                   int seq_len) {
  if (seq_len <= 0) throw InputError("encode_sample: seq_len must be > 0");
  EncodedSample enc;
  enc.matrix = Eigen::MatrixXd::Zero(seq_len, table.dim);
  enc.mask.assign(static_cast<std::size_t>(seq_len), 0);
  enc.valid_len = std::min<int>(seq_len, static_cast<int>(tokens.size()));
  for (int i = 0; i < enc.valid_len; ++i) {
    enc.matrix.row(i) = table.lookup(tokens[static_cast<std::size_t>(i)]);
    enc.mask[static_cast<std::size_t>(i)] = 1;
  }
  return enc;
}

}  // namespace textaug
