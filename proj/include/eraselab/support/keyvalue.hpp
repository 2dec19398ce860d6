#pragma once

// Line-oriented "key = value" text with [section] headers.
//
//   # comment                 (also after values: "key = 1  # note")
//   [section name]
//   key = value
//
// Keys before the first header belong to the unnamed section "". Blank lines
// are ignored. Section and key names are case-sensitive; values are kept
// verbatim after trimming.

#include <charconv>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eraselab::support {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct Section {
  std::string name;
  std::size_t line = 0;
  std::vector<Entry> entries;

  const Entry* find(std::string_view key) const;
};

struct Document {
  std::vector<Section> sections;
};

// Throws Error(Format) with the offending line number.
Document parse_keyvalue(std::string_view text, std::string_view source_name);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double x);
std::string format_doubles(const std::vector<double>& xs);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);
std::optional<bool> parse_bool(std::string_view s);
std::optional<std::vector<double>> parse_doubles(std::string_view s);
std::string_view trim(std::string_view s);

}  // namespace eraselab::support
