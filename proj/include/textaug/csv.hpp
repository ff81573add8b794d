#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "textaug/errors.hpp"

namespace textaug {

/// One parsed CSV record plus the 1-based line number it started on.
struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

/// RFC-4180 style parser: quoted fields, "" escapes, CRLF or LF line ends.
/// Embedded newlines inside quoted fields are supported.
inline std::vector<CsvRecord> parse_csv(const std::string& content) {
  std::vector<CsvRecord> records;
  std::vector<std::string> fields;
  std::string field;
  std::size_t line = 1;
  std::size_t record_line = 1;
  bool in_quotes = false;
  bool had_any_char = false;

  auto end_field = [&] {
    fields.push_back(field);
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    records.push_back({std::move(fields), record_line});
    fields = {};
    had_any_char = false;
    record_line = line;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        had_any_char = true;
        break;
      case ',':
        end_field();
        had_any_char = true;
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        if (had_any_char || !field.empty() || !fields.empty()) end_record();
        record_line = line;
        break;
      default:
        field.push_back(c);
        had_any_char = true;
        break;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field at end of input");
  if (had_any_char || !field.empty() || !fields.empty()) end_record();
  return records;
}

inline std::vector<CsvRecord> read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

/// Quotes a field if it contains a comma, quote, or newline.
inline std::string csv_escape(const std::string& field) {
  const bool needs_quote =
      field.find_first_of(",\"\r\n") != std::string::npos;
  if (!needs_quote) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline std::string format_csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_escape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

}  // namespace textaug
