#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hitlist::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_record(std::string_view line);

/// Splits on runs of spaces/tabs.
std::vector<std::string_view> split_whitespace(std::string_view line);

/// Quotes a field if it contains a comma, quote or newline.
std::string quote(std::string_view field);

std::string_view trim(std::string_view s);

/// Removes a trailing '\r' left by CRLF files.
inline std::string_view chomp(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

}  // namespace hitlist::csv
