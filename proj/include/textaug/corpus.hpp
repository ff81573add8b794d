#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "textaug/csv.hpp"
#include "textaug/errors.hpp"
#include "textaug/rng.hpp"

namespace textaug {

/// How a sample entered a dataset.
enum class Origin { kOriginal, kBacktranslated, kParaphrase };

inline const char* origin_name(Origin o) {
  switch (o) {
    case Origin::kOriginal: return "original";
    case Origin::kBacktranslated: return "backtranslated";
    case Origin::kParaphrase: return "paraphrase";
  }
  return "original";
}

inline Origin parse_origin(const std::string& s) {
  if (s == "original") return Origin::kOriginal;
  if (s == "backtranslated") return Origin::kBacktranslated;
  if (s == "paraphrase") return Origin::kParaphrase;
  throw ParseError("unknown origin: " + s);
}

/// A labeled text record. Augmented samples point back at their source via
/// parent_id and must carry the parent's label.
struct Sample {
  std::int64_t id = 0;
  std::string text;
  int label = 0;  // 1 = hate/cyberbullying, 0 = not
  Origin origin = Origin::kOriginal;
  std::optional<std::int64_t> parent_id;
};

inline std::string trim_whitespace(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n\v\f");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n\v\f");
  return s.substr(b, e - b + 1);
}

/// An immutable-after-load collection of samples.
struct Dataset {
  std::string name;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  std::map<int, std::size_t> class_counts() const {
    std::map<int, std::size_t> counts;
    for (const auto& s : samples) ++counts[s.label];
    return counts;
  }

  std::size_t count_label(int label) const {
    std::size_t n = 0;
    for (const auto& s : samples)
      if (s.label == label) ++n;
    return n;
  }

  std::int64_t max_id() const {
    std::int64_t m = -1;
    for (const auto& s : samples) m = std::max(m, s.id);
    return m;
  }

  /// Checks the structural invariants; throws InputError on violation.
  /// Label preservation is checked by chasing parent links to the root.
  void validate() const {
    std::unordered_map<std::int64_t, const Sample*> by_id;
    for (const auto& s : samples) {
      if (s.label != 0 && s.label != 1)
        throw InputError("sample " + std::to_string(s.id) + ": label must be 0 or 1");
      if (trim_whitespace(s.text).empty())
        throw InputError("sample " + std::to_string(s.id) + ": empty text");
      if ((s.origin == Origin::kOriginal) == s.parent_id.has_value())
        throw InputError("sample " + std::to_string(s.id) +
                         ": parent_id must be present iff origin != original");
      if (!by_id.emplace(s.id, &s).second)
        throw InputError("duplicate sample id " + std::to_string(s.id));
    }
    for (const auto& s : samples) {
      const Sample* cur = &s;
      std::size_t hops = 0;
      while (cur->parent_id) {
        auto it = by_id.find(*cur->parent_id);
        if (it == by_id.end())
          throw InputError("sample " + std::to_string(s.id) + ": dangling parent_id");
        if (it->second->label != s.label)
          throw InputError("sample " + std::to_string(s.id) +
                           ": label differs from parent");
        cur = it->second;
        if (++hops > samples.size())
          throw InputError("parent_id cycle involving sample " + std::to_string(s.id));
      }
    }
  }
};

/// Column mapping for loading one of the heterogeneous source corpora.
struct ColumnMapping {
  std::string text_column;
  std::string label_column;
  /// Raw label string -> {0,1}. Defaults to "0"/"1".
  std::map<std::string, int> label_map = {{"0", 0}, {"1", 1}};
  /// Keep only the first max_rows data rows when > 0 (e.g. the Wikipedia
  /// corpus is capped at 9000 rows).
  std::size_t max_rows = 0;
};

/// Loads a UTF-8 CSV with a header row. One Sample per row, ids assigned by
/// row order starting at 0, origin = original.
inline Dataset load_dataset(const std::string& path, const ColumnMapping& mapping,
                            const std::string& name = "") {
  auto records = read_csv_file(path);
  if (records.empty()) throw ParseError(path + ": empty file");

  const auto& header = records.front().fields;
  auto find_col = [&](const std::string& col) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), col);
    if (it == header.end())
      throw ParseError(path + ": missing column '" + col + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t text_idx = find_col(mapping.text_column);
  const std::size_t label_idx = find_col(mapping.label_column);

  Dataset ds;
  ds.name = name.empty() ? path : name;
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (mapping.max_rows > 0 && ds.samples.size() >= mapping.max_rows) break;
    const auto& rec = records[r];
    if (rec.fields.size() <= std::max(text_idx, label_idx))
      throw ParseError(path + ":" + std::to_string(rec.line) + ": too few columns");
    Sample s;
    s.id = static_cast<std::int64_t>(ds.samples.size());
    s.text = trim_whitespace(rec.fields[text_idx]);
    if (s.text.empty())
      throw ParseError(path + ":" + std::to_string(rec.line) + ": empty text");
    const std::string& raw = rec.fields[label_idx];
    auto it = mapping.label_map.find(trim_whitespace(raw));
    if (it == mapping.label_map.end())
      throw ParseError(path + ":" + std::to_string(rec.line) +
                       ": unparseable label '" + raw + "'");
    s.label = it->second;
    if (s.label != 0 && s.label != 1)
      throw ParseError(path + ":" + std::to_string(rec.line) +
                       ": label_map value must be 0 or 1");
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw ParseError(path + ": no data rows");
  return ds;
}

/// Canonical interchange format: id,text,label,origin,parent_id.
inline void save_canonical(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << "id,text,label,origin,parent_id\n";
  for (const auto& s : ds.samples) {
    out << format_csv_row({std::to_string(s.id), s.text, std::to_string(s.label),
                           origin_name(s.origin),
                           s.parent_id ? std::to_string(*s.parent_id) : ""});
  }
  if (!out) throw IoError("write failed: " + path);
}

inline Dataset load_canonical(const std::string& path, const std::string& name = "") {
  auto records = read_csv_file(path);
  if (records.empty()) throw ParseError(path + ": empty file");
  const std::vector<std::string> expected = {"id", "text", "label", "origin",
                                             "parent_id"};
  if (records.front().fields != expected)
    throw ParseError(path + ": not a canonical dataset file");
  Dataset ds;
  ds.name = name.empty() ? path : name;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != 5)
      throw ParseError(path + ":" + std::to_string(rec.line) + ": expected 5 columns");
    Sample s;
    try {
      s.id = std::stoll(rec.fields[0]);
      s.label = std::stoi(rec.fields[2]);
      s.origin = parse_origin(rec.fields[3]);
      if (!rec.fields[4].empty()) s.parent_id = std::stoll(rec.fields[4]);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(rec.line) + ": malformed row");
    }
    s.text = rec.fields[1];
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw ParseError(path + ": no data rows");
  ds.validate();
  return ds;
}

/// Deterministic split parameters. Identical (dataset, spec) inputs always
/// yield identical splits.
struct SplitSpec {
  double train_fraction = 0.70;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
      throw ConfigError("train_fraction must be in (0,1)");
  }
};

/// Seeded random partition. Train size is round-half-up of fraction * N.
/// Members keep their original relative order within each part.
inline std::pair<Dataset, Dataset> split(const Dataset& dataset, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = dataset.size();
  if (n < 2) throw InputError("cannot split a dataset with fewer than 2 samples");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(spec.seed);
  rng.shuffle(order);

  std::size_t train_n = static_cast<std::size_t>(
      std::floor(spec.train_fraction * static_cast<double>(n) + 0.5));
  train_n = std::clamp<std::size_t>(train_n, 1, n - 1);

  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < train_n; ++i) in_train[order[i]] = true;

  Dataset train, eval;
  train.name = dataset.name + "/train";
  eval.name = dataset.name + "/eval";
  for (std::size_t i = 0; i < n; ++i)
    (in_train[i] ? train : eval).samples.push_back(dataset.samples[i]);
  return {std::move(train), std::move(eval)};
}

/// Samples carrying the requested label, input order preserved.
inline Dataset filter_by_label(const Dataset& dataset, int label) {
  Dataset out;
  out.name = dataset.name + "/label" + std::to_string(label);
  for (const auto& s : dataset.samples)
    if (s.label == label) out.samples.push_back(s);
  return out;
}

}  // namespace textaug
