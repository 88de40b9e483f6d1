#pragma once

#include <string>
#include <vector>

namespace tagscope {

// Minimal RFC-4180 style CSV. Tokens in real corpora include commas and
// quotes, so fields are escaped on write and unescaped on read.

inline std::string csv_escape(const std::string& field) {
  bool needs_quotes = field.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += csv_escape(fields[i]);
  }
  out.push_back('\n');
  return out;
}

// Parses one logical text block into rows of fields. Quoted fields may
// contain commas and doubled quotes; embedded newlines are not supported.
std::vector<std::vector<std::string>> csv_parse(const std::string& text);

}  // namespace tagscope
